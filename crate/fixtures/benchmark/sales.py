import pandas as pd

# %%
"""
query: Load `inputs/sales.csv` into a DataFrame named `sales`.
data:
  sales.csv: data/sales.csv
validator:
  namespace_check:
    sales:
"""
sales = pd.read_csv('inputs/sales.csv')

# %%
"""
query: Add a column `revenue` to `sales` holding units times price.
validator:
  intact:
    update: [sales]
  namespace_check:
    sales:
      atol: 0.001
"""
sales['revenue'] = sales['units'] * sales['price']

# %%
"""
query: Compute the total revenue of each region, sorted from highest to lowest.
"""
sales.groupby('region')['revenue'].sum().sort_values(ascending=False)

# %%
"""
query: Print the number of rows in `sales`.
validator:
  or:
    output:
"""
print(len(sales))

# %%
"""
query: Which region has the highest mean price? Answer with the region name.
validator:
  result:
    atol: 0
"""
sales.groupby('region')['price'].mean().idxmax()

# %%
"""
query: Build a table of total units with one row per region and one column per month.
validator:
  result:
    ignore_order: true
"""
sales.pivot_table(index='region', columns='month', values='units', aggfunc='sum')

# %%
"""
query: What fraction of rows sold more than 20 units? Round to 3 decimals.
validator:
  result:
    atol: 0.001
execution:
  max_time: 5
"""
round((sales['units'] > 20).mean(), 3)
