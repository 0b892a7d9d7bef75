"""Tolerance and numerical-parameter record shared by all modules."""

from dataclasses import asdict, dataclass, field, replace


@dataclass(frozen=True)
class Tolerances:
    # warp scalar criteria
    tol_ncc: float = 1e-10
    tol_inf: float = 1e-9
    tol_root: float = 1e-10
    scan_points: int = 4096
    refine_rounds: int = 3
    probe_eps: float = 1e-3
    # graph geometry
    eps_space: float = 1e-6
    # solver
    solver_tol: float = 1e-9
    max_iter: int = 50
    damping_floor: float = 2.0 ** -20
    linear_rtol: float = 1e-2
    # C in the C*h**2 pass thresholds, one per check; see grwlab.verify.calibrate
    check_constants: dict = field(
        default_factory=lambda: {
            "lemma1": 24.0,
            "laplacian_identity": 6.1,
            "ricci_bound": 2.1,
            "nishikawa": 14.0,
        }
    )

    def with_overrides(self, **kwargs):
        kwargs = {k: v for k, v in kwargs.items() if v is not None}
        return replace(self, **kwargs)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


DEFAULT = Tolerances()
