__all__ = ["TrialPool"]


import threading
import traceback

from concurrent.futures import ThreadPoolExecutor, as_completed
from typing             import Callable, Dict, List, Any, Sequence
from loguru             import logger
from time               import time



class TrialPool:

  def __init__(self, workers : int=1):
    """
    Runs independent Monte-Carlo trials on a thread pool.

    Parameters:
    ----------
    workers : int
        Number of threads; 1 runs the trials inline.
    """
    self.workers    = max(int(workers), 1)
    self.__lock     = threading.Lock()
    self.__done     = 0
    self.__failed   = 0
    self.__exec_time= 0.0


  def run(self, fn : Callable[[int], Any], trials : Sequence[int]) -> List[Any]:
    """
    Call fn(trial) for every trial index and return the results in trial order,
    whatever order the threads finish in.
    """
    trials = list(trials)
    start = time()
    results : Dict[int, Any] = {}
    if self.workers == 1:
      for trial in trials:
        results[trial] = self.__call(fn, trial)
    else:
      with ThreadPoolExecutor(max_workers=self.workers) as executor:
        futures = {executor.submit(self.__call, fn, trial) : trial for trial in trials}
        for future in as_completed(futures):
          results[futures[future]] = future.result()
    self.__exec_time += time() - start
    return [results[trial] for trial in trials]


  def __call(self, fn, trial):
    try:
      value = fn(trial)
    except Exception:
      with self.__lock:
        self.__failed += 1
      logger.debug(traceback.format_exc())
      raise
    with self.__lock:
      self.__done += 1
    return value


  def metrics(self) -> Dict[str, float]:
    with self.__lock:
      return {
        "exec_time" : self.__exec_time,
        "done"      : self.__done,
        "failed"    : self.__failed,
        "workers"   : self.workers,
      }
