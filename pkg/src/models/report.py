"""
Quality and privacy report models.
"""

from typing import Dict, Optional

from pydantic import BaseModel, ConfigDict, Field


class MetricsOptions(BaseModel):
    """`metrics` section of config/engine.yaml."""

    model_config = ConfigDict(extra="forbid")

    n_groups: int = Field(default=10, ge=2, description="Deciles for numeric/datetime columns")
    top_k: int = Field(default=10, ge=1, description="Categories kept for categorical columns")
    dcr_max_steps: int = Field(default=16, ge=1)
    exhaustive_coherence: bool = False
    seed: int = 0


class AccuracyScores(BaseModel):
    overall: float = Field(ge=0.0, le=1.0)
    per_column: Dict[str, float] = Field(
        default_factory=dict, description="Per column, or per 'a|b' pair for bivariate scores"
    )


class QAReport(BaseModel):
    """Fidelity and privacy metrics of a synthetic table against its training data."""

    acc_univariate: AccuracyScores
    acc_bivariate: Optional[AccuracyScores] = None
    acc_coherence: Optional[AccuracyScores] = None
    acc_overall: float = Field(ge=0.0, le=1.0)
    dcr_share: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    sample_sizes: Dict[str, int] = Field(default_factory=dict)
    warnings: list = Field(default_factory=list)
    holdout_reference: Optional["QAReport"] = Field(
        default=None, description="Holdout scored as if synthetic (noise floor)"
    )

    def summary_text(self) -> str:
        """Plain-text summary written next to report.json."""
        lines = ["QUALITY REPORT", "=" * 40]

        def block(report: "QAReport", indent: str = "") -> None:
            lines.append(f"{indent}univariate accuracy : {report.acc_univariate.overall:.4f}")
            if report.acc_bivariate is not None:
                lines.append(f"{indent}bivariate accuracy  : {report.acc_bivariate.overall:.4f}")
            if report.acc_coherence is not None:
                lines.append(f"{indent}coherence accuracy  : {report.acc_coherence.overall:.4f}")
            lines.append(f"{indent}overall accuracy    : {report.acc_overall:.4f}")
            if report.dcr_share is not None:
                lines.append(f"{indent}DCR share           : {report.dcr_share:.4f}")

        block(self)
        if self.holdout_reference is not None:
            lines.append("")
            lines.append("holdout reference (noise floor):")
            block(self.holdout_reference, indent="  ")
        lines.append("")
        lines.append("per column (univariate):")
        for column, acc in self.acc_univariate.per_column.items():
            lines.append(f"  {column:<30} {acc:.4f}")
        if self.acc_coherence is not None:
            lines.append("per column (coherence):")
            for column, acc in self.acc_coherence.per_column.items():
                lines.append(f"  {column:<30} {acc:.4f}")
        if self.sample_sizes:
            lines.append("")
            lines.append("sample sizes: " + ", ".join(f"{k}={v}" for k, v in self.sample_sizes.items()))
        for warning in self.warnings:
            lines.append(f"warning: {warning}")
        return "\n".join(lines) + "\n"
