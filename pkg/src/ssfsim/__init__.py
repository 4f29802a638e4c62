"""Desk-scale toolkit for spatial spinal fixation studies: plans curved
drilling trajectories, simulates the semi-autonomous drilling procedure
against a voxel vertebra phantom, checks flexible-screw feasibility, and
evaluates measured trajectories (registration, transition, curvature).
"""

from .control import (AdmittanceConfig, ControlConfig, ProcedureState, Stage, StageInput,
                      Timeline, Twist, Wrench, admittance_step, apply_deadzone,
                      procedure_schedule, step)
from .evaluation import (EvalConfig, SummaryTable, TrialReport, aggregate, detect_transition,
                         evaluate_trial, fit_circle_3d, radius_error)
from .geometry import RigidTransform
from .phantom import PhantomSpec, VoxelPhantom, build_phantom
from .registration import ICPResult, icp_register, kabsch
from .screw import (FeasibilityReport, ScrewParams, check_feasibility, default_fps,
                    rigid_chord_limit)
from .simulate import DrillingSession, SimLog, simulate_procedure
from .tracker import TrackerLog, read_tracker_csv, synthesize_tracker_log, write_tracker_csv
from .trajectory import (BilateralPlan, Polyline3, TrajectoryPlan, arc_endpoint, centerline,
                         load_plan, make_bilateral, make_label, make_plan, save_plan)

__version__ = "0.1.0"
