"""Application logic for the fire-management example."""

from iotc.sim import ComponentLogic


class FireControllerLogic(ComponentLogic):
    """Ring the alarm and notify residents on every smoke event."""

    def on_consume(self, ctx, topic, record):
        if topic != "smokeMeasurement":
            return
        ctx.send_command("Alarm", "Trigger")
        ctx.publish("fireNotify", {"fireState": "FIRE", "location": "kitchen#1"})
