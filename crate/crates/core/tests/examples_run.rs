// Every example doubles as a smoke test.

macro_rules! example {
    ($name:ident) => {
        mod $name {
            include!(concat!("../examples/", stringify!($name), ".rs"));
        }

        #[test]
        fn $name() {
            $name::run_example().unwrap();
        }
    };
}

example!(tokenize_and_vectorize);
example!(hdp_topics);
example!(lssr_table);
example!(estimate_k);
example!(spherical_kmeans);
example!(cop_kmeans);
example!(evaluate);
example!(pipeline);
