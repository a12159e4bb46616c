//! Plain-text gantt rendering of a schedule: one row per egress port.

use gatesched_core::schedule::Schedule;

const BAR_WIDTH: usize = 64;

pub fn render(schedule: &Schedule) -> String {
    let mut out = String::new();
    out.push_str("gate windows per egress port (one cycle)\n");
    for port in schedule.ports.values() {
        let mut bar = vec!['.'; BAR_WIDTH];
        let mut windows: Vec<_> = port.windows.iter().filter(|w| !w.is_empty()).collect();
        windows.sort_by_key(|w| w.open);
        for w in &windows {
            let from = (w.open as u128 * BAR_WIDTH as u128 / port.hyperperiod as u128) as usize;
            let to = (w.close as u128 * BAR_WIDTH as u128 / port.hyperperiod as u128) as usize;
            let to = to.max(from + 1).min(BAR_WIDTH);
            for cell in bar.iter_mut().take(to).skip(from) {
                *cell = '#';
            }
        }
        let labels: Vec<String> = windows
            .iter()
            .map(|w| format!("w{}[{},{}]", w.index, w.open, w.close))
            .collect();
        out.push_str(&format!(
            "{:>16} |{}| hp={} {}\n",
            port.link.to_string(),
            bar.iter().collect::<String>(),
            port.hyperperiod,
            labels.join(" ")
        ));
    }
    out
}
