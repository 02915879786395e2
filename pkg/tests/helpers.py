from core.blackbox import BlackBox
from core.space import HConvention, PerturbationSpace
from synth.functions import make_function


def black_box(fn, target, baseline, h=HConvention.UNIT):
    return BlackBox.from_function(PerturbationSpace.create(target, baseline, h), fn)


def synthetic_box(name, p=40, h=HConvention.UNIT):
    fn = make_function(name, p=p)
    return fn, BlackBox.from_function(fn.space(h), fn)
