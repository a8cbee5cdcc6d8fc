"""
Formatting utility functions for reports and CLI output.
"""

from typing import Any, Dict, Optional, Sequence

import pandas as pd
from loguru import logger


def format_value(value: Optional[float], precision: int = 4) -> str:
    """Fixed-precision number, '-' for missing values."""
    if value is None or pd.isna(value):
        return "-"
    return f"{value:.{precision}f}"


def format_range(low: float, high: float, precision: int = 4) -> str:
    """Closed interval as '[low, high]'."""
    return f"[{format_value(low, precision)}, {format_value(high, precision)}]"


def format_vector(values: Sequence[float], precision: int = 4) -> str:
    """
    Format a weight vector for display.

    Args:
        values: Numbers to format
        precision: Decimal places

    Returns:
        String like '(0.5000, 0.5000)'
    """
    return "(" + ", ".join(format_value(float(v), precision) for v in values) + ")"


def format_weights_summary(record: Dict[str, Any]) -> str:
    """
    Format a weight-scheme record (lambda, omega, structured terms).

    Args:
        record: Output of the weight record builder

    Returns:
        Multi-line summary
    """
    try:
        scheme = record.get("scheme", {})
        lines = [f"Scheme: {scheme.get('kind', 'unknown')}"]
        lines.append(f"  omega:  {format_vector(record['omega'])}")
        lines.append(f"  lambda: {format_vector(record['lambda'])}")
        for k, terms in enumerate(record.get("terms", [])):
            lines.append(f"  shard {k}: complexity={terms['complexity']:.4f} "
                         f"entropy_control={terms['entropy_control']:.4f} "
                         f"uncertainty={terms['uncertainty_penalty']:.4f}")
        return "\n".join(lines)
    except (KeyError, TypeError) as e:
        logger.error(f"Error formatting weight record: {e}")
        return "Weight summary unavailable"


def format_solver_diagnostics(diagnostics: Dict[str, Any]) -> str:
    """One-line barycenter solver summary."""
    status = "converged" if diagnostics.get("converged") else "NOT converged"
    return (f"{status} after {diagnostics.get('iterations', 0)} iterations, "
            f"residual {diagnostics.get('residual', float('nan')):.3e}, "
            f"{diagnostics.get('wall_time', 0.0):.2f}s")


def format_bound_table(frame: pd.DataFrame) -> str:
    """
    Render a bound-suite DataFrame as an aligned pass/fail table.

    Args:
        frame: Rows with lhs_star, rhs, rhs_log_c and holds

    Returns:
        Table text followed by a summary line
    """
    if frame.empty:
        return "No instances"
    shown = frame.copy()
    shown["holds"] = shown["holds"].map(lambda h: "PASS" if h else "FAIL")
    table = shown.to_string(index=False, float_format=lambda v: f"{v:.6f}")
    passed = int(frame["holds"].sum())
    return f"{table}\n\n{passed}/{len(frame)} instances satisfy the bound"
