import pandas as pd
from sklearn.linear_model import LogisticRegression
from sklearn.tree import DecisionTreeClassifier

# %%
"""
query: Read `inputs/passengers.csv` into a DataFrame called `passengers`.
data:
  passengers.csv: data/passengers.csv
validator:
  namespace_check:
    passengers:
"""
passengers = pd.read_csv('inputs/passengers.csv')

# %%
"""
query: Fill the missing ages in `passengers` with the median age, modifying it in place.
validator:
  intact:
    update: [passengers]
  namespace_check:
    passengers:
"""
passengers['age'] = passengers['age'].fillna(passengers['age'].median())

# %%
"""
query: Put the features age, fare and pclass in `X` and the survived column in `y`.
validator:
  namespace_check:
    X:
    y:
"""
X = passengers[['age', 'fare', 'pclass']]
y = passengers['survived']

# %%
"""
query: Fit a logistic regression classifier named `clf` on X and y.
validator:
  model:
    model: clf
    test_x: X
    test_y: y
    metric: accuracy
    tolerance: 0.05
"""
clf = LogisticRegression(max_iter=1000).fit(X, y)

# %%
"""
query: Fit a decision tree classifier named `tree` with max_depth 3 and random_state 0.
validator:
  model:
    model: tree
    test_x: X
    test_y: y
    threshold: 0.7
"""
tree = DecisionTreeClassifier(max_depth=3, random_state=0).fit(X, y)

# %%
"""
query: What is the mean fare of each passenger class?
"""
passengers.groupby('pclass')['fare'].mean()
