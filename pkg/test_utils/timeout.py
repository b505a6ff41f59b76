from functools import wraps
from queue import Queue
from threading import Thread


def _run_into(queue, args, kwargs, method):
    try:
        queue.put(method(*args, **kwargs))
    except Exception as e:
        queue.put(e)


def timeout(sec=30):
    """ Fails the wrapped test with TimeoutError once it runs longer than sec seconds. """
    def timeout_dec(func):
        @wraps(func)
        def test(*args, **kwargs):
            q = Queue()
            worker = Thread(target=_run_into, args=[q, args, kwargs, func], daemon=True)
            worker.start()
            worker.join(sec)

            if worker.is_alive():
                # the thread cannot be killed, the suite just moves on
                raise TimeoutError(f"Timed out after {sec} seconds")
            result = q.get()
            if isinstance(result, Exception):
                raise result
            return result
        return test
    return timeout_dec
