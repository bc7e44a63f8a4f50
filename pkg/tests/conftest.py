import os

# Pin BLAS pools before numpy loads anywhere in the test session so float
# results are independent of machine parallelism.
for _var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(_var, "1")
