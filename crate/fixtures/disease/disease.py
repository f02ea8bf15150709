import pandas as pd
import numpy as np

# %%
"""
query: |
  Import the dataset from `inputs/Disease_symptom_and_patient_profile_dataset.csv`. Assign it to a variable called `disease`.
data:
  Disease_symptom_and_patient_profile_dataset.csv: data/Disease_symptom_and_patient_profile_dataset.csv
validator:
  namespace_check:
    disease:
"""
disease = pd.read_csv('inputs/Disease_symptom_and_patient_profile_dataset.csv')

# %%
"""
query: |
  Check the balance of the dataset. Count the number of positive and negative outcomes. Put them in a Series with "Positive" and "Negative" as the index.
"""
disease['Outcome Variable'].value_counts()

# %%
"""
query: |
  Handle the imbalance in the dataset using oversampling. Randomly duplicate some rows from the minority class to make it have the same number of rows as the majority class (use `resample` in sklearn with `random_state` 123 please). Save the balanced dataset in `disease_balanced`.
validator:
  namespace_check:
    disease_balanced:
      ignore_order: true
"""
from sklearn.utils import resample

df_majority = disease[disease['Outcome Variable'] == 'Positive']
df_minority = disease[disease['Outcome Variable'] == 'Negative']
df_minority_upsampled = resample(df_minority, replace=True, n_samples=df_majority.shape[0], random_state=123)
disease_balanced = pd.concat([df_majority, df_minority_upsampled])

# %%
"""
query: |
  Convert binary features into indicator (0/1) variables, and other categorical features (except "Disease" column) into numerical features using one-hot encoding. Save the encoded dataset in-place.
validator:
  namespace_check:
    disease_balanced:
"""
for column in ['Fever', 'Cough', 'Fatigue', 'Difficulty Breathing']:
    disease_balanced[column] = disease_balanced[column].map({'Yes': 1, 'No': 0})
disease_balanced['Outcome Variable'] = disease_balanced['Outcome Variable'].map({'Positive': 1, 'Negative': 0})

categorical_columns = [column for column in disease_balanced.columns if disease_balanced[column].dtype == 'object' and column != "Disease"]
disease_balanced = pd.get_dummies(disease_balanced, columns=categorical_columns)

# %%
"""
query: |
  Assume the disease name is irrelevant. Split the dataset into training and test sets with a test size of 20% and random_state 42.
validator:
  namespace_check:
    X_train:
    y_train:
    X_test:
    y_test:
"""
from sklearn.model_selection import train_test_split

X = disease_balanced.drop(['Outcome Variable', 'Disease'], axis=1)
y = disease_balanced['Outcome Variable']

X_train, X_test, y_train, y_test = train_test_split(X, y, test_size=0.2, random_state=42)
