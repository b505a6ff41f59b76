import abc


class InvalidValueException(Exception):
    pass


class Decorator(abc.ABC):
    """ Tags a test function with an attribute that run_tests.py reads back. """

    def __init__(self, v) -> None:
        res = self.validate(v)
        if res:
            raise InvalidValueException(res)
        self.v = v

    def validate(self, v):
        return None

    def __call__(self, func):
        setattr(func, self.get_attr_name(), self.v)
        return func

    @classmethod
    def get_attr_name(cls):
        return f"__{cls.__name__}__"


class number(Decorator):
    """ @number("3.2"): the test belongs to module 3, check 2. """

    def validate(self, v):
        if not isinstance(v, str) or not v.replace(".", "").isdigit():
            return "Test numbers look like '3.2'."


class slow(Decorator):
    """ Reference-resolution runs. Skipped unless run_tests.py gets --slow. """

    def __init__(self) -> None:
        self.v = True
