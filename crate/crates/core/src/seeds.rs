//! Default initial opinions shipped with new surveys (English renderings).

pub const INITIAL_OPINIONS: [&str; 12] = [
    "Domestic violence",
    "I had to close my business because of a declining number of customers.",
    "I cannot concentrate on my work because of school closure.",
    "I am afraid of the pressure that I might experience from others if I become infected with COVID-19.",
    "My business is suffering.",
    "I do not know what is going to happen to me if I become infected.",
    "I am hesitant to visit my doctor even when I feel sick with the common cold, etc., because I do not want to catch the virus.",
    "I cannot get a PCR test even when I want to get tested.",
    "I cannot get a paid leave even if I tested positive with COVID-19, and I would have no choice but to take a leave without pay or quit my job.",
    "I am not sure if I can afford to pay medical bills if I become infected.",
    "I am spending too much on childcare costs.",
    "I do not have much money left and I am not sure if I can survive without public assistance.",
];

pub fn initial_opinions() -> Vec<String> {
    INITIAL_OPINIONS.iter().map(|s| s.to_string()).collect()
}
