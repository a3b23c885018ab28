from .config import STAGES, AuditConfig
from .pipeline import (
    BiasReportBundle,
    Pipeline,
    run_data_bias_audit,
    run_full,
    run_group_bias_audit,
    run_rec_bias_audit,
    save_checkpoints,
    segment_users,
)
from .report import emit_reports, load_reports

__all__ = [
    "STAGES",
    "AuditConfig",
    "BiasReportBundle",
    "Pipeline",
    "emit_reports",
    "load_reports",
    "run_data_bias_audit",
    "run_full",
    "run_group_bias_audit",
    "run_rec_bias_audit",
    "save_checkpoints",
    "segment_users",
]
