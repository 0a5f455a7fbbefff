"""Renyi relative entropies of quantum Gaussian states."""
