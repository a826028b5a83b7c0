from drfpca.task.task_thread_pool import ThreadPoolManager, ThreadPoolTask, default_workers, run_ordered
