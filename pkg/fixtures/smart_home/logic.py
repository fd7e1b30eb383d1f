"""Application logic for the smart-home example, registered per stub id:

    iotc run build --traces traces --storage storage.json \
        --logic Proximity=logic.py:ProximityLogic \
        --logic RoomController=logic.py:RoomControllerLogic \
        --logic FireController=logic.py:FireControllerLogic \
        --logic DisplayController=logic.py:DisplayControllerLogic \
        --logic EndUserApp=ui_recorder --logic DashBoard=ui_recorder \
        --horizon-ms 60000
"""

from iotc.sim import ComponentLogic


class ProximityLogic(ComponentLogic):
    """Look up the profile behind each badge and republish it."""

    def on_consume(self, ctx, topic, record):
        ctx.send_request("ProfileDB", record["badgeID"])

    def on_response(self, ctx, target, record):
        ctx.publish("proximityMeasurement", record)


class RoomControllerLogic(ComponentLogic):
    """Drive the heater toward the current resident's preferred temperature."""

    def __init__(self):
        self.preferred = 30.0

    def on_consume(self, ctx, topic, record):
        if topic == "proximityMeasurement":
            self.preferred = record["preferredTemp"]
            return
        avg = record["tempValue"]
        if avg < self.preferred - 5.0:
            ctx.send_command("Heater", "SetTemp", self.preferred)
        elif avg > self.preferred + 6.0:
            ctx.send_command("Heater", "Off")


class FireControllerLogic(ComponentLogic):
    """Every smoke event rings the alarm and notifies residents."""

    def on_consume(self, ctx, topic, record):
        ctx.send_command("Alarm", "Trigger")
        ctx.publish("fireNotify", {"fireState": "FIRE", "location": "room#1"})


class DisplayControllerLogic(ComponentLogic):
    """Merge indoor readings with the outside temperature for the dashboard."""

    def __init__(self):
        self.state = {"tempValue": 0.0, "humidityValue": 0.0, "outTempValue": 0.0}
        self.seen = set()

    def on_consume(self, ctx, topic, record):
        if topic == "roomAvgTempMeasurement":
            self.state["tempValue"] = record["tempValue"]
            self.seen.add("temp")
            ctx.send_request("YahooWeatherService", "home")
        elif topic == "humidityMeasurement":
            self.state["humidityValue"] = record["humidityValue"]
            self.seen.add("humidity")

    def on_response(self, ctx, target, record):
        self.state["outTempValue"] = record["outTempValue"]
        self.seen.add("weather")
        if len(self.seen) == 3:
            ctx.publish("dashboardNotify", dict(self.state))
