from .generator import StateGeneratorType, init_state_generator, load_state_generator
from .seq2seq import MarkovTransformer, infer_autoregressive, load_model
from .state_generator import StateGenerator
