"""Human-motion compensation for a body-mounted 6-DoF arm.

Kinematics, task-priority differential IK (nullspace-based and
reconstructed-Jacobian), singular value filtering, joint limiting, a 60 Hz
closed-loop simulator and the evaluation indices.
"""

__version__ = "0.1.0"
