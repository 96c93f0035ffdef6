"""Robot kinematics module initialization."""
