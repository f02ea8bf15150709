import time

import numpy as np
import pandas as pd
from sklearn.preprocessing import LabelEncoder

crimes = pd.DataFrame({
    'Decade': ['1960s', '1970s', '1980s', '1990s', '2000s'],
    'Violent': [288, 467, 597, 730, 507],
    'Property': [1726, 3167, 3600, 4500, 3500],
})
fatalities = pd.DataFrame({'date_of_event': pd.to_datetime(
    ['2001-03-01', '2001-07-15', '2002-01-09', '2003-05-05', '2003-06-06', '2003-09-09'])})
df = pd.DataFrame({
    'name': ['Ann', 'Bob', 'Cid', 'Dee', 'Eve', 'Fay', 'Gus'],
    'age': [34, 28, 45, 51, 39, 22, 30],
    'city': ['Oslo', 'Rome', 'Oslo', 'Lima', 'Rome', 'Oslo', 'Lima'],
    'score': [7.5, 8.0, 6.5, 9.0, 7.0, 8.5, 6.0],
})
billionaires = pd.DataFrame({
    'personName': list('ABCDEFGHIJ'),
    'industries': ['Technology'] * 4 + ['Finance'] * 3 + ['Retail'] * 2 + ['Energy'],
})
euro12 = pd.DataFrame(np.arange(44).reshape(4, 11), columns=[f'stat{i}' for i in range(11)])
apple = pd.DataFrame({
    'Date': pd.to_datetime(['2020-01-02', '2020-01-03', '2020-01-03', '2020-01-06']),
    'Close': [75.1, 74.4, 74.9, 74.3],
})
baby_names = pd.DataFrame({'Year': [2001, 2001, 2002, 2003], 'Count': [5, 9, 3, 7]})
pokemon = pd.DataFrame({'name': ['Bulbasaur', 'Charmander', 'Squirtle', 'Caterpie']})
netflix = pd.DataFrame({' title ': ['Dark', 'Ozark'], ' release   year ': [2017, 2017]})
growth = pd.Series([0.1, None, 0.3], dtype=object)
army = pd.DataFrame(
    {'deaths': [523, 52, 120], 'battles': [5, 42, 2], 'size': [1045, 957, 1099]},
    index=['Maine', 'Arizona', 'Iowa'],
)
chipo = pd.DataFrame({'item_price': ['$2.39', '$12.50', '$10.99', '$8.75']})
heart = pd.DataFrame({
    'Patient ID': ['BMW7812', 'CZE1114', 'BNI9906', 'JLN3497'],
    'Age': [67, 21, 21, 84],
    'Cholesterol': [208, 389, 324, 383],
    'Heart Attack Risk': [0, 0, 1, 1],
})

# %%
"""
query: What is the most dangerous decade in `crimes`, counting all crime columns? Answer like "1990s".
"""
crimes.loc[crimes.iloc[:, 1:].sum(axis=1).idxmax(), 'Decade']

# %%
"""
query: Count the fatalities for each year. Return a Series with "Year" as the index and "Number of Fatalities" as the values, sorted by year.
"""
fatalities['date_of_event'].dt.year.value_counts().sort_index().rename_axis('Year').rename('Number of Fatalities')

# %%
"""
query: Show the first rows of `df`.
"""
df.head()

# %%
"""
query: List the names of the top 3 industries with the most billionaires.
"""
billionaires.groupby('industries')['personName'].count().sort_values(ascending=False).head(3).index.tolist()

# %%
"""
query: What is the number of columns in `df`?
"""
len(df.columns)

# %%
"""
query: Select all columns of `euro12` except the last 3.
"""
euro12.iloc[:, :-3]

# %%
"""
query: Express each person's age in decades as floating point numbers.
"""
df['age'] / 10

# %%
"""
query: Round each score to the nearest integer, returned as a Series named `rounded`.
"""
df['score'].round().rename('rounded')

# %%
"""
query: Are there any duplicate dates in `apple`?
"""
apple['Date'].duplicated().any()

# %%
"""
query: Get a summary with the mean, min, max, std and quartiles of `baby_names`.
"""
baby_names.describe()

# %%
"""
query: How many people live in Oslo?
"""
(df['city'] == 'Oslo').sum()

# %%
"""
query: |
  Add a column `place` to `pokemon`: Bulbasaur is in park, Caterpie is in
  forest, Squirtle is in lake, Charmander is in street.
validator:
  namespace_check:
    pokemon:
"""
pokemon['place'] = pokemon['name'].map(
    {'Bulbasaur': 'park', 'Caterpie': 'forest', 'Squirtle': 'lake', 'Charmander': 'street'})

# %%
"""
query: Keep the people older than 30 in a new variable `older`.
validator:
  namespace_check:
    older:
"""
older = df[df['age'] > 30]

# %%
"""
query: Store the ages as floating point numbers in `ages`.
validator:
  namespace_check:
    ages:
"""
ages = df['age'].astype(float)

# %%
"""
query: Remove excessive spaces from the column names of `netflix`. Save the cleaned dataset in-place.
validator:
  namespace_check:
    netflix:
"""
netflix.columns = netflix.columns.str.replace(r'\s+', ' ', regex=True).str.strip()

# %%
"""
query: Store the list of distinct cities, in order of first appearance, in `cities`.
validator:
  namespace_check:
    cities:
"""
cities = df['city'].unique().tolist()

# %%
"""
query: Store the mean age in `mean_age`.
validator:
  namespace_check:
    mean_age:
"""
mean_age = df['age'].mean()

# %%
"""
query: Write a function `top_two(values)` returning the two largest numbers of a list, largest first.
validator:
  table_test:
    function_name: top_two
    test_cases:
    - - [3, 1, 2]
    - - [5, 9, 7, 1]
"""
def top_two(values):
    return sorted(values, reverse=True)[:2]

# %%
"""
query: Write a function `to_series(values)` returning the numbers as a float Series named `value`.
validator:
  table_test:
    function_name: to_series
    test_cases:
    - - [1, 2, 3]
"""
def to_series(values):
    return pd.Series(values, dtype=float, name='value')

# %%
"""
query: Compute the sum of the squares of the integers below 1000.
execution:
  max_time: 0.5
"""
sum(i * i for i in range(1000))

# %%
"""
query: Cross-tabulate the city of each person against whether they are older than 30.
"""
pd.crosstab(df['city'], df['age'] > 30)

# %%
"""
query: Fill the missing values of `growth` with NaN.
"""
growth.fillna(value=np.nan)

# %%
"""
query: Select the third cell in the row of `army` named Arizona.
"""
army.loc['Arizona'].iloc[2]

# %%
"""
query: Calculate the Pearson correlation between the score and the age of the people in `df`.
"""
df['score'].corr(df['age'])

# %%
"""
query: How many items in `chipo` cost more than $10.00?
"""
(chipo['item_price'].str.lstrip('$').astype(float) > 10).sum()

# %%
"""
query: |
  Compute the correlation of heart attack risk against the other numeric
  features of `heart`, sorted by absolute value in descending order.
"""
corr = heart.drop(columns='Patient ID').corr()['Heart Attack Risk'].drop('Heart Attack Risk')
corr.abs().sort_values(ascending=False)

# %%
"""
query: Store the oldest age in `oldest` and show it.
validator:
  namespace_check:
    oldest:
"""
oldest = df['age'].max()
oldest
