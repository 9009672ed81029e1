from .runs import STAGE_ORDER, RunConfig, RunEngine, RunState, RunStore

__all__ = ["STAGE_ORDER", "RunConfig", "RunEngine", "RunState", "RunStore"]
