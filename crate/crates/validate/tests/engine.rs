use dseval_core::{parse_str, Problemset};
use dseval_runtime::{build_ground_truth, GroundTruth, Session, SessionConfig};
use dseval_validate::{
    classify_verdict, result_options, ClassifyInput, CompositeMode, Engine, Outcome, ReferenceProbe,
    ValidationContext, ValidationError, Verdict,
};

struct Bench {
    ps: Problemset,
    gt: GroundTruth,
    config: SessionConfig,
}

impl Bench {
    fn new(text: &str) -> Bench {
        let ps = parse_str(text, "t").expect("fixture parses");
        let config = SessionConfig::default();
        let mut s = Session::start(config.clone()).unwrap();
        let gt = build_ground_truth(&ps, &mut s).expect("references run");
        Bench { ps, gt, config }
    }

    fn judge(&self, index: usize, code: &str) -> Result<(Outcome, Verdict), ValidationError> {
        let problem = &self.ps.problems[index];
        let step = &self.gt.steps[index];
        let mut sub = Session::start(self.config.clone()).unwrap();
        sub.restore(&step.pre).unwrap();
        let result = sub.execute(code, &problem.execution).unwrap();
        let engine = Engine::standard().with_mode(CompositeMode::Exhaustive);
        let tree = engine.expand(&problem.validator)?;
        let mut slot = None;
        let mut reference = ReferenceProbe::new(&step.post, &self.config, &mut slot);
        let outcome = {
            let mut ctx = ValidationContext::from_step(problem, code, &result, &mut sub, step, &mut reference);
            engine.run(&tree, &mut ctx)?
        };
        let verdict = classify_verdict(&ClassifyInput {
            code,
            result: &result,
            reference_result: &step.reference_result,
            outcome: &outcome,
            result_options: result_options(&tree),
        });
        Ok((outcome, verdict))
    }
}

const CRIMES: &str = r#"import pandas as pd
crimes = pd.DataFrame({
    'Year': [1961, 1975, 1982, 1991, 1995, 2003],
    'Murder': [8740, 20510, 21010, 24700, 21610, 16528],
    'Robbery': [106670, 470500, 553130, 687730, 580510, 414235],
})

# %%
"""
query: What is the most dangerous decade to live in the US? Write it in the format of "19XXs" or "20XXs".
"""
decades = (crimes['Year'] // 10 * 10)
str(crimes.assign(total=crimes['Murder'] + crimes['Robbery']).groupby(decades)['total'].sum().idxmax()) + 's'
"#;

#[test]
fn reference_code_passes_its_own_tree() {
    let bench = Bench::new(CRIMES);
    let code = &bench.ps.problems[0].reference_code;
    let (outcome, verdict) = bench.judge(0, code).unwrap();
    assert!(outcome.pass, "{outcome:?}");
    assert_eq!(verdict.to_string(), "Correct");
}

#[test]
fn adding_a_column_to_protected_table_is_intact_violation() {
    let bench = Bench::new(CRIMES);
    let code = "crimes['Total_Crimes'] = crimes['Murder'] + crimes['Robbery']\n\
                str(crimes.groupby(crimes['Year'] // 10 * 10)['Total_Crimes'].sum().idxmax()) + 's'";
    let (outcome, verdict) = bench.judge(0, code).unwrap();
    let failing: Vec<_> = outcome.effective_failures().iter().map(|o| o.kind.name()).collect();
    assert_eq!(failing, ["namespace_intact"]);
    assert_eq!(verdict.to_string(), "Intact Violation");
}

const EMAILS: &str = r#"import pandas as pd

# %%
"""
query: Find all duplicate emails in the Person table.
validator:
  table_test:
    function_name: duplicate_emails
    input_validator: |
      def _validate(person):
        assert person.shape[0] > 0
        assert person.dtypes.equals(pd.Series({'id': 'int64', 'email': 'object'}))
        assert person.id.is_unique
    output_checker:
      ignore_order: true
    test_cases:
    - - "`pd.DataFrame({'id': [1, 2, 3], 'email': ['a@b.com', 'c@d.com', 'a@b.com']})`"
    - - "`pd.DataFrame({'id': [1], 'email': ['a@b.com']})`"
    - - "`pd.DataFrame({'id': [1, 2, 3], 'email': ['a@b.com', 'a@b.com', 'a@b.com']})`"
    - - "`pd.DataFrame({'id': [1, 2, 3], 'email': ['a@b.com', 'c@d.com', 'e@f.com']})`"
    - - "`pd.DataFrame({'id': [1, 2, 3, 4], 'email': ['a@b.com', 'c@d.com', 'a@b.com', 'c@d.com']})`"
    - - "`pd.DataFrame({'id': [1, 2, 3, 4, 5], 'email': ['a@b.com', 'c@d.com', 'a@b.com', 'c@d.com', 'e@f.com']})`"
"""
def duplicate_emails(person: pd.DataFrame) -> pd.DataFrame:
    email_counts = person.groupby("email").size().reset_index(name="count")
    duplicates = email_counts[email_counts["count"] > 1]
    return duplicates[["email"]]
"#;

#[test]
fn duplicate_emails_in_any_order_pass_all_cases() {
    let bench = Bench::new(EMAILS);
    let code = "def duplicate_emails(person):\n    \
                d = person[person.duplicated('email', keep=False)]\n    \
                return d[['email']].drop_duplicates().iloc[::-1]\n";
    let (outcome, verdict) = bench.judge(0, code).unwrap();
    assert!(outcome.pass, "{outcome:?}");
    assert_eq!(verdict.to_string(), "Correct");
}

#[test]
fn duplicate_emails_wrong_column_is_unit_test_failure() {
    let bench = Bench::new(EMAILS);
    let code = "def duplicate_emails(person):\n    \
                d = person[person.duplicated('email', keep=False)]\n    \
                return d.drop_duplicates('email')[['id']]\n";
    let (_, verdict) = bench.judge(0, code).unwrap();
    assert_eq!(verdict.to_string(), "Unit-test Failure / Columns Mismatch");
}

#[test]
fn missing_reference_variable_is_configuration_error() {
    let text = "x = 1\n# %%\n\"\"\"\nquery: q\nvalidator:\n  namespace_check:\n    nowhere:\n\"\"\"\ny = 2\n";
    let bench = Bench::new(text);
    let err = bench.judge(0, "y = 2").unwrap_err();
    assert!(err.is_config(), "{err}");
}

#[test]
fn updating_every_name_always_keeps_intact() {
    let text = "a = 1\nb = [1, 2]\n# %%\n\"\"\"\nquery: q\nvalidator:\n  intact:\n    update: [a, b]\n\"\"\"\na + 1\n";
    let bench = Bench::new(text);
    let (outcome, _) = bench.judge(0, "a = 5\nb.append(3)\na + 1 - 5 + 1").unwrap();
    let intact = outcome.nodes().into_iter().find(|o| o.kind.name() == "namespace_intact").unwrap();
    assert!(intact.pass);
}

#[test]
fn model_validator_scores_against_reference() {
    let text = r#"from sklearn.linear_model import LogisticRegression
X = [[0], [1], [2], [3], [4], [5]]
y = [0, 0, 0, 1, 1, 1]
X_test = [[0.5], [4.5]]
y_test = [0, 1]

# %%
"""
query: Fit a logistic regression on X, y and save it as clf.
validator:
  model:
    model: clf
    test_x: X_test
    test_y: y_test
    metric: accuracy
"""
clf = LogisticRegression().fit(X, y)
"#;
    let bench = Bench::new(text);
    let (good, v) = bench.judge(0, "clf = LogisticRegression(C=10).fit(X, y)").unwrap();
    assert!(good.pass, "{good:?}");
    assert_eq!(v.to_string(), "Correct");
    let (_, v) = bench
        .judge(0, "from sklearn.dummy import DummyClassifier\nclf = DummyClassifier(strategy='constant', constant=0).fit(X, y)")
        .unwrap();
    assert_eq!(v.to_string(), "Wrong Variables / Value Mismatch");
}

#[test]
fn figure_example_requires_exact_answer() {
    let text = r#"import pandas as pd
pop = pd.DataFrame({'country': ['A', 'B', 'C'], 'growth': [0.1234, 0.1181, 0.2]})

# %%
"""
query: What is the mean growth of the first two countries? Round to 2 decimals.
validator:
  or:
    result:
      atol: 0
    output:
  intact:
    update: [pop]
"""
round(pop['growth'][:2].mean(), 2)
"#;
    let bench = Bench::new(text);
    let (_, v) = bench.judge(0, "round(pop['growth'][:2].mean(), 2)").unwrap();
    assert_eq!(v.to_string(), "Correct");
    let (_, v) = bench.judge(0, "pop['growth'][:2].mean()").unwrap();
    assert_eq!(v.to_string(), "Wrong Output / Value Mismatch");
    let (_, v) = bench.judge(0, "print(round(pop['growth'][:2].mean(), 2))").unwrap();
    assert_eq!(v.to_string(), "Presentation Error / Missing Return");
}
