"""RIS-assisted multi-user downlink simulator and optimization suite.

Submodules
----------
channel   geometric multipath channels, mobility, blockage
signal    SINR / spectral-efficiency chain and feasibility projections
codebook  DFT codebooks and the beam-sweeping baseline
encoder   transformer channel encoder (pretrain / fine-tune / embed)
learn     dense nets, manual backprop, Adam/AdamW, soft updates
hdrl      SMDP environment, DDPG controllers, training loops
kernels   compiled rate/sweep kernels with NumPy fallback
cli       command-line entry points and experiment drivers
"""

from . import channel, codebook, encoder, hdrl, kernels, learn, signal

__version__ = "0.1.0"
