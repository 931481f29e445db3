"""Named experiments. Each entry maps to a function returning an ExperimentReport;
``takes_k`` marks the ones parameterized by a sequence index."""

from dataclasses import dataclass


@dataclass(frozen=True)
class Experiment:
    name: str
    module: str
    function: str
    takes_k: bool = False
    default_k: int = None

    def run(self, k=None, **kwargs):
        from importlib import import_module

        fn = getattr(import_module(f"{__name__}.{self.module}"), self.function)
        if self.takes_k:
            kwargs["k"] = self.default_k if k is None else k
        return fn(**kwargs)


EXPERIMENTS = {e.name: e for e in [
    Experiment("sphere", "sphere", "example_sphere"),
    Experiment("divergent_factors", "examples", "example_divergent_factors", True, 4),
    Experiment("divergent_isotopies", "examples", "example_divergent_isotopies", True, 1),
    Experiment("cantor", "examples", "example_cantor", True, 4),
    Experiment("triangle_failure", "checks", "example_triangle_failure", True, 8),
    Experiment("reeb_conjugation", "checks", "example_reeb_conjugation"),
    Experiment("group_laws", "properties", "group_law_suite"),
    Experiment("sandwiches", "properties", "sandwich_suite"),
    Experiment("symplectization", "properties", "symplectization_suite"),
    Experiment("bd_reduction", "properties", "bd_reduction_suite"),
]}

CAUCHY_FAMILIES = ("divergent_factors", "divergent_isotopies", "cantor")
