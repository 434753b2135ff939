"""A reduced version of the distance study.

The full study (16 cells, 5 replicates, 5000 sweeps) is available as
``sizeshape replicate-table1`` and takes about ten minutes on one core.  This
script runs one replicate with shorter chains to show the trends.
"""
# %%
from sizeshape.diagnostics import format_table1
from sizeshape.study import PUBLISHED_RHO, median_table, replicate_table1, table_rows

# %%
results = replicate_table1(replicates=1, base_seed=2, iterations=1500, burn_in=500)
medians = median_table(results)
print(format_table1(table_rows(medians)))

# %% [markdown]
# Published single-replicate values for comparison.

# %%
print(format_table1(table_rows(PUBLISHED_RHO)))
