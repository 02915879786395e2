"""Arithmetic expressions over features x1..xp.

Grammar: numbers, identifiers x1..xp, + - * /, unary minus, parentheses
and the calls min, max, relu, abs. Anything else is rejected.
"""
import ast
import operator
import re

from errors import UsageError

_FEATURE = re.compile(r"x([1-9][0-9]*)$")

_BINARY = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
}
_UNARY = {ast.USub: operator.neg, ast.UAdd: operator.pos}
_CALLS = {
    "min": min,
    "max": max,
    "abs": abs,
    "relu": lambda x: max(x, 0.0),
}
_ARITY = {"relu": (1, 1), "abs": (1, 1), "min": (2, None), "max": (2, None)}


class Expression:
    def __init__(self, source):
        self.source = source
        try:
            tree = ast.parse(source.strip(), mode="eval")
        except SyntaxError as e:
            raise UsageError(f"Cannot parse expression {source!r}: {e.msg}")
        self.features = set()
        self._check(tree.body)
        self._tree = tree.body

    @property
    def p(self):
        """Smallest feature count the expression fits in."""
        return max(self.features) + 1 if self.features else 0

    def _check(self, node):
        if isinstance(node, ast.Constant):
            if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
                raise UsageError(f"Unsupported constant {node.value!r}")
        elif isinstance(node, ast.Name):
            match = _FEATURE.match(node.id)
            if not match:
                raise UsageError(f"Unknown identifier {node.id!r}; use x1..xp")
            self.features.add(int(match.group(1)) - 1)
        elif isinstance(node, ast.BinOp):
            if type(node.op) not in _BINARY:
                raise UsageError(f"Unsupported operator {type(node.op).__name__}")
            self._check(node.left)
            self._check(node.right)
        elif isinstance(node, ast.UnaryOp):
            if type(node.op) not in _UNARY:
                raise UsageError(f"Unsupported operator {type(node.op).__name__}")
            self._check(node.operand)
        elif isinstance(node, ast.Call):
            name = node.func.id if isinstance(node.func, ast.Name) else None
            if name not in _CALLS or node.keywords:
                raise UsageError(f"Unsupported call in expression {self.source!r}")
            low, high = _ARITY[name]
            if len(node.args) < low or (high is not None and len(node.args) > high):
                raise UsageError(f"Wrong number of arguments to {name}")
            for arg in node.args:
                self._check(arg)
        else:
            raise UsageError(f"Unsupported syntax {type(node).__name__} in {self.source!r}")

    def __call__(self, v):
        return float(self._eval(self._tree, v))

    def _eval(self, node, v):
        if isinstance(node, ast.Constant):
            return float(node.value)
        if isinstance(node, ast.Name):
            return float(v[int(node.id[1:]) - 1])
        if isinstance(node, ast.BinOp):
            return _BINARY[type(node.op)](self._eval(node.left, v), self._eval(node.right, v))
        if isinstance(node, ast.UnaryOp):
            return _UNARY[type(node.op)](self._eval(node.operand, v))
        return _CALLS[node.func.id](*(self._eval(arg, v) for arg in node.args))


def parse_expression(source) -> Expression:
    return Expression(source)
