import sys
import warnings
from typing import Callable, Iterable, List, TypeVar

import progressbar
import torch
import torch.multiprocessing as mp

Job = TypeVar("Job")
Result = TypeVar("Result")


def _init_worker() -> None:
    if not sys.warnoptions:
        warnings.filterwarnings("ignore")
    # one BLAS thread per worker so k workers use k cores
    torch.set_num_threads(1)


def statusbar(n_jobs: int) -> progressbar.ProgressBar:
    return progressbar.ProgressBar(
        widgets=[
            progressbar.Bar(),
            " ",
            progressbar.Counter(format="%(value)d/%(max_value)d"),
            " | ",
            progressbar.AdaptiveETA(),
            " | ",
            progressbar.Timer(),
        ],
        max_value=n_jobs,
        fd=sys.stderr,
    )


def run_jobs(fn: Callable[[Job], Result], jobs: Iterable[Job], n_workers: int = 1, show_progress: bool = True) -> List[Result]:
    """Map fn over jobs; results come back in input order.

    n_workers <= 1 runs in-process. Otherwise jobs go to a spawn-context
    torch.multiprocessing pool, so fn and every job must be picklable
    (module-level functions, plain data).
    """
    jobs = list(jobs)
    if not jobs:
        return []
    bar = statusbar(len(jobs)) if show_progress else None
    results = []
    if n_workers <= 1:
        for job in jobs:
            results.append(fn(job))
            if bar is not None:
                bar.update(len(results))
    else:
        ctx = mp.get_context("spawn")
        with ctx.Pool(processes=min(n_workers, len(jobs)), initializer=_init_worker) as pool:
            for result in pool.imap(fn, jobs):
                results.append(result)
                if bar is not None:
                    bar.update(len(results))
    if bar is not None:
        bar.finish()
    return results
