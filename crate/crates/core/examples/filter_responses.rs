//! Prints the magnitude responses of the peripheral filters and the
//! modulation filters.
//!
//! cargo run -p binharm --example filter_responses

use binharm::model::ModulationFilter;
use binharm::signal::{erb, Butterworth, Gammatone, GAMMATONE_ORDER};

fn db(x: f64) -> f64 {
    20.0 * x.log10()
}

fn main() -> binharm::Result<()> {
    let fs = 48_000.0;
    let gammatone = Gammatone::new(800.0, erb(800.0), GAMMATONE_ORDER, fs)?;
    let lp770 = Butterworth::lowpass(770.0, 5, fs)?;
    let lp380 = Butterworth::lowpass(380.0, 4, fs)?;
    println!("ERB(800 Hz) = {:.2} Hz", erb(800.0));
    println!("  freq  gammatone  lp770  lp380");
    for f in [100.0, 380.0, 600.0, 700.0, 770.0, 800.0, 900.0, 1000.0, 2000.0] {
        println!(
            "{f:6.0}  {:9.2}  {:5.1}  {:5.1}",
            db(gammatone.response(f).norm()),
            db(lp770.response(f).norm()),
            db(lp380.response(f).norm())
        );
    }

    let env_rate = 2000.0;
    let mod40 = ModulationFilter::new(40.0, 2.0, env_rate)?;
    let mod20 = ModulationFilter::new(20.0, 2.0, env_rate)?;
    println!("  freq  mod40  mod20");
    for f in [5.0, 10.0, 20.0, 30.0, 40.0, 60.0, 100.0] {
        println!("{f:6.0}  {:5.1}  {:5.1}", db(mod40.response(f).norm()), db(mod20.response(f).norm()));
    }
    Ok(())
}
