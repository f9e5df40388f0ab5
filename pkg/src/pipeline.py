import logging

from .config import Config
from .formula import Formula
from .minimize import MinimizationResult, minimize_bruteforce, minimize_qbf, minimize_sat
from .models import Algorithm, MinimizeConfig, QbfMode

logger = logging.getLogger(__name__)


class MinimizationPipeline:
    """Dispatches a formula to one of the minimizers under a shared configuration."""

    def __init__(self, cfg: MinimizeConfig | None = None):
        Config.validate()
        self.cfg = cfg or MinimizeConfig()

    def config_for(self, algorithm: Algorithm) -> MinimizeConfig:
        if algorithm is Algorithm.QBF_FAST:
            return self.cfg.model_copy(update={"qbf_mode": QbfMode.FAST})
        if algorithm is Algorithm.QBF_EXACT:
            return self.cfg.model_copy(update={"qbf_mode": QbfMode.EXACT})
        return self.cfg

    def run(self, phi: Formula, algorithm: Algorithm) -> MinimizationResult:
        cfg = self.config_for(algorithm)
        logger.info("Minimizing %s with %s", phi, algorithm.value)
        if algorithm is Algorithm.BRUTE:
            return minimize_bruteforce(phi, cfg)
        if algorithm is Algorithm.SAT:
            return minimize_sat(phi, cfg)
        return minimize_qbf(phi, cfg)
