"""Multi-judge LLM evaluation of complementary-item recommendations."""

from .consensus import (
    ConsensusLabel,
    JudgmentMatrix,
    PanelSelection,
    VoteTally,
    agreement_rate,
    assemble_matrix,
    majority_vote,
    select_panel,
    synthesize_ground_truth,
    tally,
)
from .domain import Category, CIPattern, Determination, IssueCode, Item, ItemPair, JudgeIdentity, Severity
from .metrics import EvaluatorScorecard, cohen_kappa, score_judge
from .orchestrator import Pipeline, RunConfig, SimulationSpec, load_config, simulate
from .reporting import AggregateReport, build_report, render_report

__version__ = "0.1.0"

__all__ = [
    "AggregateReport",
    "CIPattern",
    "Category",
    "ConsensusLabel",
    "Determination",
    "EvaluatorScorecard",
    "IssueCode",
    "Item",
    "ItemPair",
    "JudgeIdentity",
    "JudgmentMatrix",
    "PanelSelection",
    "Pipeline",
    "RunConfig",
    "Severity",
    "SimulationSpec",
    "VoteTally",
    "agreement_rate",
    "assemble_matrix",
    "build_report",
    "cohen_kappa",
    "load_config",
    "majority_vote",
    "render_report",
    "score_judge",
    "select_panel",
    "simulate",
    "synthesize_ground_truth",
    "tally",
]
