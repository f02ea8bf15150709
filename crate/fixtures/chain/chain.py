nums = list(range(1, 11))

# %%
"""
query: Store the sum of `nums` in a variable named `total`.
validator:
  namespace_check:
    total:
"""
total = sum(nums)

# %%
"""
query: What is `total` doubled?
"""
total * 2

# %%
"""
query: Is `total` greater than 50?
"""
total > 50
