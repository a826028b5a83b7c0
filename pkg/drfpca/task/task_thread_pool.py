"""
线程池任务管理模块
多起点求解、网格点与交叉验证折共用的工作线程池，结果按提交顺序合并
"""

import logging
import queue
import threading
import time
from typing import Any, Callable, Iterable, List, Optional

import psutil

logger = logging.getLogger(__name__)

_STOP = object()


def default_workers() -> int:
    """物理核数，取不到时退回逻辑核数"""
    return psutil.cpu_count(logical=False) or psutil.cpu_count() or 1


class ThreadPoolTask:
    """
    线程池任务封装类
    """

    def __init__(self, func: Callable, args: tuple = (), kwargs: dict = None, name: str = ""):
        self.func = func
        self.args = args
        self.kwargs = kwargs if kwargs else {}
        self.name = name or getattr(func, "__name__", "task")
        self.result = None
        self.exception: Optional[BaseException] = None
        self.seconds = 0.0
        self.finished_event = threading.Event()

    def run(self):
        """
        执行任务，捕获异常留给 wait 重新抛出
        """
        start = time.perf_counter()
        try:
            self.result = self.func(*self.args, **self.kwargs)
        except Exception as e:
            self.exception = e
        finally:
            self.seconds = time.perf_counter() - start
            self.finished_event.set()

    @property
    def done(self) -> bool:
        return self.finished_event.is_set()

    def wait(self, timeout: Optional[float] = None) -> Any:
        """
        等待任务完成，可设置超时时间
        """
        if not self.finished_event.wait(timeout):
            raise TimeoutError(f"Task {self.name} execution timeout")
        if self.exception:
            raise self.exception
        return self.result


class ThreadPoolManager:
    """
    线程池管理类，工作线程从队列取任务，关闭时每个线程收到一个停止标记
    """

    def __init__(self, max_workers: Optional[int] = None):
        self.max_workers = max(1, max_workers or default_workers())
        self.task_queue: "queue.Queue" = queue.Queue()
        self.threads: List[threading.Thread] = []
        self.shutdown_flag = threading.Event()
        self.active_tasks = set()
        self.completed = 0
        self.lock = threading.Lock()
        self._init_threads()

    def _init_threads(self):
        for i in range(self.max_workers):
            t = threading.Thread(target=self._worker, name=f"drfpca-worker-{i}", daemon=True)
            t.start()
            self.threads.append(t)

    def _worker(self):
        while True:
            task = self.task_queue.get()
            if task is _STOP:
                self.task_queue.task_done()
                return
            with self.lock:
                self.active_tasks.add(task)
            try:
                self.before_task(task)
                task.run()
                self.after_task(task)
            finally:
                with self.lock:
                    self.active_tasks.discard(task)
                    self.completed += 1
                self.task_queue.task_done()

    def submit(self, func: Callable, args: tuple = (), kwargs: dict = None, name: str = "") -> ThreadPoolTask:
        """
        提交任务到线程池，返回任务对象用于结果获取
        """
        if self.shutdown_flag.is_set():
            raise RuntimeError("Thread pool has been shut down")
        task = ThreadPoolTask(func, args, kwargs, name)
        self.task_queue.put(task)
        return task

    def wait_all(self, timeout: Optional[float] = None):
        """
        等待所有已提交任务完成
        """
        start_time = time.time()
        while True:
            with self.lock:
                if not self.active_tasks and self.task_queue.unfinished_tasks == 0:
                    return
            if timeout and (time.time() - start_time) > timeout:
                raise TimeoutError("Waiting for all tasks to timeout")
            time.sleep(0.01)

    def shutdown(self, wait: bool = True):
        """
        关闭线程池；已排队的任务先执行完，再逐个收到停止标记
        """
        if self.shutdown_flag.is_set():
            return
        self.shutdown_flag.set()
        for _ in self.threads:
            self.task_queue.put(_STOP)
        if wait:
            for t in self.threads:
                t.join()

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        self.shutdown(wait=True)

    def before_task(self, task: ThreadPoolTask):
        """
        任务执行前的钩子
        """
        logger.debug("Starting %s", task.name)

    def after_task(self, task: ThreadPoolTask):
        """
        任务执行后的钩子
        """
        logger.debug("Finished %s in %.3fs", task.name, task.seconds)

    def get_active_task_count(self) -> int:
        with self.lock:
            return len(self.active_tasks)

    def get_status(self) -> dict:
        return {
            "max_workers": self.max_workers,
            "active_tasks": self.get_active_task_count(),
            "queued_tasks": self.task_queue.qsize(),
            "completed_tasks": self.completed,
            "shutdown": self.shutdown_flag.is_set()
        }


def run_ordered(func: Callable, arg_list: Iterable[tuple], workers: Optional[int] = 1,
                name: str = "") -> List[ThreadPoolTask]:
    """
    对每组参数执行 func，返回按提交顺序排列的已完成任务
    workers <= 1 时在当前线程内顺序执行；异常保存在任务上，不在此处抛出
    """
    arg_list = list(arg_list)
    if workers is None:
        workers = default_workers()
    if workers <= 1 or len(arg_list) <= 1:
        tasks = []
        for i, args in enumerate(arg_list):
            task = ThreadPoolTask(func, args, name=f"{name}[{i}]")
            task.run()
            tasks.append(task)
        return tasks
    with ThreadPoolManager(min(workers, len(arg_list))) as pool:
        tasks = [pool.submit(func, args, name=f"{name}[{i}]") for i, args in enumerate(arg_list)]
        pool.wait_all()
        logger.debug("Pool %s drained: %s", name or "tasks", pool.get_status())
    return tasks
