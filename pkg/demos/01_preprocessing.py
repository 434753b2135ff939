"""From raw landmarks to size-and-shape.

Run with ``python3 demos/01_preprocessing.py``.  Each ``# %%`` block is a cell.
"""
# %%
import numpy as np

from sizeshape.geometry import decompose, helmert_submatrix, helmertize, random_rotation, ss_distance

np.set_printoptions(precision=4, suppress=True)

# %% [markdown]
# Four landmarks in the plane.  The Helmert submatrix has one row fewer than
# there are landmarks; its rows are orthonormal and each sums to zero, so
# multiplying by it removes location.

# %%
square = np.array([[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [0.0, 1.0]])
h = helmert_submatrix(3)
print(h)
print("H H^T =\n", h @ h.T)

# %%
pre = helmertize(square)
moved = helmertize(square + [5.0, -3.0])
print("pre-form\n", pre)
print("translation changes nothing:", np.allclose(pre, moved))

# %% [markdown]
# The SVD splits the pre-form into a rotation-free part ``Y = U D`` and an
# orientation ``R`` with ``pre = Y R^T``.  Rotating the object moves only ``R``.

# %%
rng = np.random.default_rng(0)
sas, r = decompose(pre)
q = random_rotation(2, rng)
sas_q, r_q = decompose(pre @ q.T)
print("Y\n", sas.y)
print("Y after rotating the object\n", sas_q.y)
print("orientations differ by q:", np.allclose(r_q, q @ r))

# %% [markdown]
# The size-and-shape distance minimizes over rotations only.  A mirror image
# is therefore at a positive distance, while a rotated copy is at zero.

# %%
mirror = helmertize(square * [1.0, -1.0] + [[0, 0], [0, 0], [0, 0], [0.3, 0]])
print("rotated copy:", ss_distance(pre, pre @ q.T))
print("perturbed mirror image:", ss_distance(pre, mirror))
