from typing import Callable, List

import logging

logger = logging.getLogger(__name__)

class Event:
    """ Multicast callback. Handlers are added with `+=`, removed with `-=` and invoked in registration order by `fire`.

    A failing handler is logged and skipped, it never aborts the solver loop that fires the event.
    """

    def __init__(self):
        self._handlers: List[Callable] = list()

    def __iadd__(self, handler: Callable):
        self._handlers.append(handler)
        return self

    def __isub__(self, handler: Callable):
        if handler in self._handlers:
            self._handlers.remove(handler)
        return self

    def __len__(self):
        return len(self._handlers)

    def __bool__(self):
        return True

    def fire(self, *args, **kwargs):
        for handler in list(self._handlers):
            try:
                handler(*args, **kwargs)
            except Exception as ex:
                logger.exception("Event handler '%s' failed: %s", getattr(handler, "__name__", handler), ex)

    __call__ = fire

    def clear(self):
        self._handlers.clear()
