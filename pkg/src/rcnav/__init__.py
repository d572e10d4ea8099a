"""Risk-aware crowd navigation: simulator, lidar tracking, collision-probability attention, TD3."""

__version__ = "0.1.0"
