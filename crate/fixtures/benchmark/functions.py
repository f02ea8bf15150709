import pandas as pd

# %%
"""
query: |
  Write a function `second_highest_salary(employee)` that takes a DataFrame with
  columns `id` and `salary` and returns a one-row DataFrame with column
  `SecondHighestSalary`, holding the second highest distinct salary or None if
  there is none.
validator:
  table_test:
    function_name: second_highest_salary
    input_validator: |
      def _validate(employee):
        assert list(employee.columns) == ['id', 'salary']
    test_cases:
    - - "`pd.DataFrame({'id': [1, 2, 3], 'salary': [100, 200, 300]})`"
    - - "`pd.DataFrame({'id': [1], 'salary': [100]})`"
    - - "`pd.DataFrame({'id': [1, 2, 3], 'salary': [100, 100, 90]})`"
"""
def second_highest_salary(employee):
    values = sorted(employee['salary'].drop_duplicates(), reverse=True)
    answer = values[1] if len(values) > 1 else None
    return pd.DataFrame({'SecondHighestSalary': [answer]})

# %%
"""
query: Write a function `fizzbuzz(n)` returning the list of FizzBuzz strings for 1..n.
validator:
  table_test:
    function_name: fizzbuzz
    test_cases:
    - 1
    - 5
    - 15
"""
def fizzbuzz(n):
    out = []
    for i in range(1, n + 1):
        word = ('Fizz' if i % 3 == 0 else '') + ('Buzz' if i % 5 == 0 else '')
        out.append(word or str(i))
    return out

# %%
"""
query: |
  Write a function `duplicate_emails(person)` that returns a DataFrame with a
  single column `email` listing every email that appears more than once.
validator:
  table_test:
    function_name: duplicate_emails
    output_checker:
      ignore_order: true
    test_cases:
    - - "`pd.DataFrame({'id': [1, 2, 3], 'email': ['a@b.com', 'c@d.com', 'a@b.com']})`"
    - - "`pd.DataFrame({'id': [1, 2, 3, 4], 'email': ['x@y.com', 'c@d.com', 'x@y.com', 'c@d.com']})`"
    - - "`pd.DataFrame({'id': [1], 'email': ['a@b.com']})`"
"""
def duplicate_emails(person):
    counts = person['email'].value_counts()
    return pd.DataFrame({'email': counts[counts > 1].index})

# %%
"""
query: List the prime numbers below 30.
validator:
  template: none
  and:
    crash:
    result:
"""
[n for n in range(2, 30) if all(n % d for d in range(2, n))]

# %%
"""
query: What is 17 multiplied by 23?
validator:
  template: none
  or:
    result:
    answer_in_source:
"""
17 * 23
