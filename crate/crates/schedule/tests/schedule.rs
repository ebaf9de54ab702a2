use approx::assert_relative_eq;
use proptest::prelude::*;
use schedule::*;

/// Closed form of the reverse protocol, written out independently.
fn reverse_closed_form(tau: f64, s_bar: f64, t: f64) -> f64 {
    if t <= tau / 2.0 {
        1.0 - 2.0 * (1.0 - s_bar) * t / tau
    } else {
        -1.0 + 2.0 * s_bar + 2.0 * (1.0 - s_bar) * t / tau
    }
}

#[test]
fn reverse_examples() {
    let sch = reverse_schedule(10.0, 0.3).unwrap();
    assert_eq!(sch.evaluate(0.0).unwrap(), 1.0);
    assert_eq!(sch.evaluate(5.0).unwrap(), 0.3);
    assert_eq!(sch.evaluate(10.0).unwrap(), 1.0);
    let half = reverse_schedule(8.0, 0.5).unwrap();
    assert_eq!(half.evaluate(2.0).unwrap(), 0.75);
    assert!(sch.is_cyclic());
    assert!(sch.is_time_symmetric(0.0));
    assert_eq!(sch.kind, ScheduleKind::Reverse);
}

#[test]
fn forward_examples() {
    let sch = forward_schedule(3.0).unwrap();
    assert_eq!(sch.evaluate(0.0).unwrap(), 0.0);
    assert_eq!(sch.evaluate(3.0).unwrap(), 1.0);
    assert_relative_eq!(sch.evaluate(1.0).unwrap(), 1.0 / 3.0, epsilon = 1e-15);
    assert!(!sch.is_cyclic());
    assert!(!sch.is_time_symmetric(1e-12));
}

#[test]
fn constant_examples() {
    let one = constant_schedule(7.0, 1.0).unwrap();
    for t in [0.0, 1.3, 3.5, 7.0] {
        assert_eq!(one.evaluate(t).unwrap(), 1.0);
    }
    assert_eq!(constant_schedule(7.0, 0.0).unwrap().evaluate(4.0).unwrap(), 0.0);
    assert_eq!(constant_schedule(7.0, 0.3).unwrap().evaluate(3.5).unwrap(), 0.3);
    assert!(one.is_cyclic());
}

#[test]
fn parameter_errors() {
    assert!(matches!(reverse_schedule(0.0, 0.5), Err(ScheduleError::Parameter(_))));
    assert!(matches!(reverse_schedule(-1.0, 0.5), Err(ScheduleError::Parameter(_))));
    assert!(matches!(reverse_schedule(1.0, 1.2), Err(ScheduleError::Parameter(_))));
    assert!(matches!(reverse_schedule(1.0, -0.2), Err(ScheduleError::Parameter(_))));
    assert!(forward_schedule(0.0).is_err());
    assert!(constant_schedule(f64::NAN, 0.5).is_err());
    assert!(constant_schedule(1.0, 2.0).is_err());
    let sch = reverse_schedule(2.0, 0.4).unwrap();
    assert!(matches!(sch.evaluate(2.5), Err(ScheduleError::Range { .. })));
    assert!(matches!(sch.evaluate(-0.1), Err(ScheduleError::Range { .. })));
}

#[test]
fn custom_breakpoints_validated() {
    assert!(Schedule::new(1.0, vec![(0.0, 0.2), (1.0, 0.6)]).is_ok());
    assert!(Schedule::new(1.0, vec![(0.0, 0.2)]).is_err());
    assert!(Schedule::new(1.0, vec![(0.1, 0.2), (1.0, 0.6)]).is_err());
    assert!(Schedule::new(1.0, vec![(0.0, 0.2), (0.5, 0.3), (0.5, 0.6), (1.0, 0.1)]).is_err());
    assert!(Schedule::new(1.0, vec![(0.0, 0.2), (1.0, 1.6)]).is_err());
}

#[test]
fn spec_round_trip() {
    let spec: ScheduleSpec = serde_json::from_str(r#"{"kind":"reverse","tau":60.0,"s_bar":0.3}"#).unwrap();
    assert_eq!(spec, ScheduleSpec::Reverse { tau: 60.0, s_bar: 0.3 });
    assert_eq!(spec.build().unwrap(), reverse_schedule(60.0, 0.3).unwrap());
    let back = serde_json::to_string(&spec).unwrap();
    assert_eq!(serde_json::from_str::<ScheduleSpec>(&back).unwrap(), spec);
}

proptest! {
    #[test]
    fn reverse_matches_closed_form(tau in 0.1f64..100.0, s_bar in 0.0f64..=1.0, u in 0.0f64..=1.0) {
        let sch = reverse_schedule(tau, s_bar).unwrap();
        let t = u * tau;
        prop_assert!((sch.evaluate(t).unwrap() - reverse_closed_form(tau, s_bar, t)).abs() < 1e-12);
    }

    #[test]
    fn reverse_is_cyclic(tau in 0.1f64..100.0, s_bar in 0.0f64..=1.0) {
        let sch = reverse_schedule(tau, s_bar).unwrap();
        prop_assert_eq!(sch.evaluate(0.0).unwrap(), 1.0);
        prop_assert_eq!(sch.evaluate(tau).unwrap(), 1.0);
        prop_assert!(sch.is_cyclic());
    }

    #[test]
    fn evaluation_is_lipschitz(tau in 0.1f64..100.0, s_bar in 0.0f64..=1.0, u in 0.0f64..1.0, eps in 0.0f64..0.01) {
        let sch = reverse_schedule(tau, s_bar).unwrap();
        let t = u * tau;
        let t2 = (t + eps * tau).min(tau);
        let diff = (sch.evaluate(t2).unwrap() - sch.evaluate(t).unwrap()).abs();
        prop_assert!(diff <= sch.max_slope() * (t2 - t) + 1e-12);
    }

    #[test]
    fn unit_dip_is_constant(tau in 0.1f64..100.0, u in 0.0f64..=1.0) {
        let rev = reverse_schedule(tau, 1.0).unwrap();
        let con = constant_schedule(tau, 1.0).unwrap();
        prop_assert_eq!(rev.evaluate(u * tau).unwrap(), con.evaluate(u * tau).unwrap());
    }

    #[test]
    fn values_stay_in_unit_interval(tau in 0.1f64..100.0, s_bar in 0.0f64..=1.0, u in 0.0f64..=1.0) {
        let s = reverse_schedule(tau, s_bar).unwrap().evaluate(u * tau).unwrap();
        prop_assert!((0.0..=1.0).contains(&s));
    }
}
