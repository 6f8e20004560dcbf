"""Standard forms of noisy quantum operations via depolarization."""

from .channel import ChoiState, apply, choi_from_kraus, choi_of_unitary, jamiolkowski_fidelity

__all__ = ["ChoiState", "apply", "choi_from_kraus", "choi_of_unitary", "jamiolkowski_fidelity"]
