from clotquant.metrics import ClotReport


def make_report(area, timestamp=None, roi_area=1000, densities=None):
    """ClotReport with a single clot of ``area`` pixels (none when 0)."""
    if densities is None:
        densities = [area] if area else []
    return ClotReport(
        n_clots=len(densities),
        clot_densities=list(densities),
        cumulative_area=sum(densities),
        occlusion_fraction=sum(densities) / roi_area,
        largest_clot=max(densities, default=0),
        roi_area=roi_area,
        min_size_used=0,
        timestamp=timestamp,
    )


# One "[PASS]/[FAIL] criterion" line per acceptance check, printed by conftest.
ACCEPTANCE_LINES: list[str] = []


def record_criterion(cid: str, ok: bool, detail: str) -> bool:
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {cid}: {detail}")
    print(ACCEPTANCE_LINES[-1])
    return ok
