use proptest::prelude::*;
use tokvec::index::Filter;
use tokvec_cli::wire::{parse_strict, SearchRequest};

fn finite() -> impl Strategy<Value = f64> {
    any::<f64>().prop_filter("finite", |v| v.is_finite())
}

fn filter() -> impl Strategy<Value = Filter> {
    prop_oneof![
        (".{1,12}", ".{0,12}").prop_map(|(f, v)| Filter::term(f, v)),
        (".{1,12}", prop::option::of(finite()), prop::option::of(finite())).prop_map(|(f, lo, hi)| Filter::range(f, lo, hi)),
    ]
}

fn request() -> impl Strategy<Value = SearchRequest> {
    (
        prop::collection::vec(finite(), 0..32),
        0usize..10_000,
        prop::option::of(0usize..100_000),
        prop::collection::vec(filter(), 0..4),
    )
        .prop_map(|(vector, size, window, filters)| SearchRequest {
            vector,
            size,
            window,
            filters,
        })
}

proptest! {
    #[test]
    fn search_request_round_trips(req in request()) {
        let text = serde_json::to_string(&req).unwrap();
        prop_assert_eq!(parse_strict::<SearchRequest>(text.as_bytes()).unwrap(), req);
    }
}

#[test]
fn defaults_fill_size_and_window() {
    let req: SearchRequest = parse_strict(br#"{"vector":[1,2]}"#).unwrap();
    assert_eq!((req.size, req.window()), (10, 100));
    let req: SearchRequest = parse_strict(br#"{"vector":[1,2],"size":3}"#).unwrap();
    assert_eq!(req.window(), 30);
}

#[test]
fn unknown_fields_name_their_path() {
    let err = parse_strict::<SearchRequest>(br#"{"vector":[1],"window_size":5}"#).unwrap_err();
    assert!(err.message.contains("window_size"));
    let err = parse_strict::<SearchRequest>(br#"{"vector":[1],"filters":[{"type":"term","field":"a","value":"b","boost":2}]}"#)
        .unwrap_err();
    assert_eq!(err.path.as_deref(), Some("filters[0]"));
    assert!(parse_strict::<SearchRequest>(br#"{"vector":[1]} trailing"#).is_err());
}
