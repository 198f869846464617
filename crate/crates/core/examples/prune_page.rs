//! Prunes page chrome and reports how much markup was removed.

use ilforge::dom::{essential_text, parse_html, prune, reduction_stats, PageMeasure, PruneRules};

const PAGE: &str = r#"<html><head><title>मौसम</title><script>track()</script><style>p{}</style></head>
<body><nav class="menu"><a href="/">होम</a><a href="/desh">देश</a></nav>
<div class="sidebar-ads"><iframe src="https://ads.example/x"></iframe></div>
<article><h1>मानसून की पहली बारिश</h1><p>दिल्ली में आज सुबह से तेज बारिश हो रही है।</p>
<img src="/img/rain.jpg" alt="बारिश में भीगते लोग"></article>
<footer id="site-footer">कॉपीराइट</footer></body></html>"#;

fn main() {
    let rules = PruneRules::default();
    let tree = parse_html(PAGE.as_bytes(), Some("utf-8")).expect("page parses");
    let pruned = prune(&tree, &rules);
    println!("{}", pruned.to_html());
    println!("essential: {}", essential_text(&tree, &rules));
    let stats = reduction_stats(&PageMeasure::of(&tree, &rules), &PageMeasure::of(&pruned, &rules)).unwrap();
    println!("size_ratio={:.3} text_retention={:.3}", stats.size_ratio, stats.text_retention);
}
