"""Domain services: scenes, kinematics, labeling, models, training, planning and evaluation."""
