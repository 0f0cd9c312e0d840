"""
Service modules for the simulator.

* :mod:`services.qcore`: exact state-vector engine
* :mod:`services.circuits`: instruction circuits, parser, branch enumeration, sampling
* :mod:`services.protocols`: parity schemes and the pigeonhole experiment
* :mod:`services.locc`: site annotation and the locality audit
* :mod:`services.lhv`: hidden-variable models and the exhaustive scan
* :mod:`services.experiment_service`: report orchestration for CLI and API
"""
from .experiment_service import ExperimentService, Report

__all__ = [
    'ExperimentService',
    'Report',
]
