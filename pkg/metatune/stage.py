"""
Stage Module
============

Basic structure for the phases of an experiment run (data, search, repeats, reports).
"""

import logging
from logging import Logger

from metatune.trial_log import TrialLog

log: Logger = logging.getLogger(__name__)


class Stage:
    """
    Basic class structure for a stage in the run pipeline.
    """
    def __init__(self, name: str, trial_log: TrialLog):
        self.name: str = name
        self.trial_log: TrialLog = trial_log

    def run(self):
        raise NotImplementedError


def run_stage(stage_obj: Stage, on_error: str = "stop"):
    """
    Run a stage with error handling.

    Parameters
    ----------
    stage_obj : Stage
        The stage object to run.
    on_error : str, optional
        "stop" logs the error and re-raises it, "continue" logs it and returns.
    """
    if on_error not in ("stop", "continue"):
        raise ValueError(f"Unknown error policy '{on_error}'")
    stage_obj.trial_log.log(f"Starting stage: {stage_obj.name}")
    log.info(f"Stage {stage_obj.name}")

    try:
        stage_obj.run()
        stage_obj.trial_log.log(f"Stage completed: {stage_obj.name}")

    except Exception as e:
        stage_obj.trial_log.log(f"ERROR in {stage_obj.name}: {e}")

        if on_error == "continue":
            log.warning(f"Continuing despite error in {stage_obj.name}: {e}")
            stage_obj.trial_log.log(f"Continuing despite error in {stage_obj.name}")
            return

        stage_obj.trial_log.log(f"Stopping run due to error in {stage_obj.name}")
        raise
