words = ['pandas', 'numpy', 'scipy', 'pandas', 'sklearn', 'numpy', 'pandas']

# %%
"""
query: Print each distinct word in `words` with its count, one per line, in order of first appearance.
validator:
  template: none
  and:
    - crash:
    - output:
"""
for w in dict.fromkeys(words):
    print(w, words.count(w))

# %%
"""
query: Return a dictionary mapping each word to its length.
"""
{w: len(w) for w in words}

# %%
"""
query: Return the longest word and its length as a tuple.
"""
max(((w, len(w)) for w in words), key=lambda t: t[1])
