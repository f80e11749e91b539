"""Mentor-guided gap crossing for a planar quadruped, trained with ARS."""

from .actuator import MotorSpec, PDGains, actuator_step, available_torque, clamp_torque
from .analysis import EpisodeLog, cost_of_transport, flight_phases
from .config import PipelineConfig, RunConfig, __version__, preset
from .controller import PolicyParams, RunningStats, TrajectoryGenerator, policy_forward
from .env import EnvConfig, Episode, ObservationLayout, apply_dropout, env_step, reset, reward
from .errors import ConfigurationError, EpisodeFinished, SimulationDiverged
from .mentor import MentorParams, checkpoint_position, sample_mentor, update_target
from .physics import ContactParams, RobotModel, RobotState, Terrain, mechanical_energy, step
from .pipeline import CurriculumSchedule, StageConfig, StageResult, run_full_pipeline, run_stage
from .sensors import LidarSpec, lidar_scan
from .terrain import CourseSpec, Hurdle, sample_course
from .trainer import ArsConfig, IterationReport, ars_iteration, evaluate_policy, train
