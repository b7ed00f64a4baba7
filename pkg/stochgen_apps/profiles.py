"""Named parameter sets for the pipeline.

Every profile is a flat dict with the keys understood by
:meth:`PipelineConfig.from_flat_dict`.
"""
from .config import DEFAULT_LR_DROPS

# Full size, training schedule of the reference setup.
full_kwargs = dict(
    q_enc_in=40, q_dec_in=20, q_out=20,
    n_tail=100, n_bulk=200, tail_level=.96, n_restarts=20,
    d_model=64, d_ff=128, n_head=4, n_enc=2, n_dec=2, n_markov=2,
    markov_order=10,
    learning_rate=1e-4, lr_drops=dict(DEFAULT_LR_DROPS),
    max_epochs=20, batch_size=128, patience=3,
    n_per_init=5,
)

# Same model, faster schedule for a single workstation.
desk_kwargs = dict(
    full_kwargs,
    learning_rate=1e-3,
    lr_drops={6: 1e-4, 8: 5e-5, 10: 1e-5, 12: 5e-6},
    max_epochs=12,
    n_restarts=5,
    sde_n_realizations=200,
    n_per_init=2,
)

# Tiny end-to-end smoke run, finishes in seconds.
dry_run_kwargs = dict(
    q_enc_in=8, q_dec_in=4, q_out=4,
    n_tail=4, n_bulk=8, tail_level=.9, n_restarts=2,
    d_model=8, d_ff=16, n_head=2, n_enc=1, n_dec=1, n_markov=1,
    markov_order=2,
    learning_rate=1e-3, lr_drops={},
    max_epochs=2, batch_size=32, patience=2,
    sde_m=2, sde_n_steps=64, sde_n_realizations=20,
    n_sim=32, n_per_init=1, tau_max=10,
    exceed_grid=(0., 15., 61), min_tail_samples=5,
)

PROFILES = dict(full=full_kwargs, desk=desk_kwargs, dry_run=dry_run_kwargs)


def get_profile(name):
    assert name in PROFILES, f'Unknown profile {name}. Choose from {list(PROFILES)}.'
    return dict(PROFILES[name])
