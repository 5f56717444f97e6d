from tvtree.event import Event

def test_handlers_fire_in_order():
    calls = list()
    event = Event()
    event += lambda value: calls.append(("first", value))
    event += lambda value: calls.append(("second", value))

    event.fire(3)

    assert calls == [("first", 3), ("second", 3)]
    assert len(event) == 2

def test_removed_handler_is_not_called():
    calls = list()

    def handler(value):
        calls.append(value)

    event = Event()
    event += handler
    event -= handler
    event -= handler
    event(1)

    assert calls == []
    assert len(event) == 0

def test_failing_handler_does_not_stop_the_others(caplog):
    calls = list()

    def failing(value):
        raise RuntimeError("broken")

    event = Event()
    event += failing
    event += calls.append
    event.fire(7)

    assert calls == [7]
    assert "failing" in caplog.text

def test_empty_event_is_truthy_and_clearable():
    event = Event()
    assert event

    event += print
    event.clear()
    assert len(event) == 0
