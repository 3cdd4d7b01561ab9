"""Physical constants shared across modules (SI)."""

GRAVITY = 9.81  # m/s^2
AIR_DENSITY = 1.225  # kg/m^3, sea level
BAR = 1.0e5  # Pa
ATMOSPHERE = 1.013e5  # Pa
