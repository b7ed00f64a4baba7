from .clustering import Region, TailRegionSpec, ClusterModel, kmeans, fit_state_space, assign_states, tail_mask
from .markov import TransitionMatrix, OrderSelection, estimate_transition_matrix, select_order, \
    simulate_chain, state_frequencies, transition_log_likelihood
