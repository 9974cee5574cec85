import time

import torch

from FactorizedTransfer import FfnoConfig, PairBatch, forward, init_params, loss_and_grad
from FactorizedTransfer.model import parameter_paths

# (config, resolution, batch size, repetitions)
SIZES = {
    "desk": (FfnoConfig(dims=2, width=32, layers=4, modes=8), 32, 32, 100),
    "paper": (FfnoConfig(dims=2, width=128, layers=4, modes=16), 64, 32, 5),
}


def setup(name):
    cfg, resolution, batch_size, reps = SIZES[name]
    params = init_params(cfg, 0)
    mask = frozenset(parameter_paths(cfg))
    # a batch of 2D states to push through the operator
    generator = torch.Generator().manual_seed(0)
    inputs = torch.randn(batch_size, 1, resolution, resolution, generator=generator)
    batch = PairBatch(inputs, torch.roll(inputs, 1, dims=-1))
    return params, mask, batch, reps


def timerfunc(func):
    """
    A timer decorator
    """

    def function_timer(name, *args, **kwargs):
        """
        A nested function for timing other functions
        """
        params, mask, batch, reps = setup(name)
        start = time.time()
        value = func(params, mask, batch, reps, *args, **kwargs)
        end = time.time()
        runtime = end - start
        msg = "The runtime for {func} ({name}) took {time} seconds to complete {reps} times"
        print(msg.format(func=func.__name__, name=name, time=runtime, reps=reps))
        return value

    return function_timer


@timerfunc
def forward_test(params, mask, batch, reps):
    with torch.no_grad():
        for _ in range(reps):
            forward(params, batch.inputs)


@timerfunc
def backward_test(params, mask, batch, reps):
    for _ in range(reps):
        loss_and_grad(params, batch, mask)


if __name__ == "__main__":
    for name in SIZES:
        forward_test(name)
        backward_test(name)
