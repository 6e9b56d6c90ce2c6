"""Measurement tables for the built-in benchmark fits.

The Kowalik and Osborne data below are the standard tables from the
classical nonlinear least-squares test collections (Kowalik & Osborne's
enzyme-kinetics fit; Osborne's exponential fits as circulated with the
More-Garbow-Hillstrom suite).
"""
from __future__ import annotations

import numpy as np

# Kowalik enzyme-kinetics fit: reaction rates KOWALIK_Y observed at
# substrate concentrations KOWALIK_U (11 points, 4 parameters).
KOWALIK_U = np.array([
    4.0000, 2.0000, 1.0000, 0.5000, 0.2500, 0.1670,
    0.1250, 0.1000, 0.0833, 0.0714, 0.0625,
])
KOWALIK_Y = np.array([
    0.1957, 0.1947, 0.1735, 0.1600, 0.0844, 0.0627,
    0.0456, 0.0342, 0.0323, 0.0235, 0.0246,
])

# Osborne's first exponential fit, sampled at t_i = 10*(i-1).  The classical
# table has 33 points; this suite fits the first OSBORNE1_M of them because
# the benchmark protocol reproduced here states a 31-dimensional residual.
OSBORNE1_M = 31
OSBORNE1_Y = np.array([
    0.844, 0.908, 0.932, 0.936, 0.925, 0.908, 0.881, 0.850, 0.818, 0.784,
    0.751, 0.718, 0.685, 0.658, 0.628, 0.603, 0.580, 0.558, 0.538, 0.522,
    0.506, 0.490, 0.478, 0.467, 0.457, 0.448, 0.438, 0.431, 0.424, 0.420,
    0.414, 0.411, 0.406,
])

# Osborne's second fit (sum of four Gaussians/exponential), sampled at
# t_i = (i-1)/10 (65 points, 11 parameters).
OSBORNE2_Y = np.array([
    1.366, 1.191, 1.112, 1.013, 0.991, 0.885, 0.831, 0.847, 0.786, 0.725,
    0.746, 0.679, 0.608, 0.655, 0.616, 0.606, 0.602, 0.626, 0.651, 0.724,
    0.649, 0.649, 0.694, 0.644, 0.624, 0.661, 0.612, 0.558, 0.533, 0.495,
    0.500, 0.423, 0.395, 0.375, 0.372, 0.391, 0.396, 0.405, 0.428, 0.429,
    0.523, 0.562, 0.607, 0.653, 0.672, 0.708, 0.633, 0.668, 0.645, 0.632,
    0.591, 0.559, 0.597, 0.625, 0.739, 0.710, 0.729, 0.720, 0.636, 0.581,
    0.428, 0.292, 0.162, 0.098, 0.054,
])
