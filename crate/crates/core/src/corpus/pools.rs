//! Sampling pools for the synthetic generator: names, banks, cities,
//! purposes, IBAN country shapes. The pools deliberately extend beyond the
//! shipped gazetteer files so gazetteer lookups stay imperfect, as they
//! would be against real data.

/// Content language of a sampled fragment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Lang {
    En,
    De,
    Es,
    Fr,
}

impl Lang {
    pub const EXTRA: [Lang; 3] = [Lang::De, Lang::Es, Lang::Fr];

    pub fn tag(&self) -> &'static str {
        match self {
            Lang::En => "en",
            Lang::De => "de",
            Lang::Es => "es",
            Lang::Fr => "fr",
        }
    }
}

pub fn first_names(lang: Lang) -> &'static [&'static str] {
    match lang {
        Lang::En => &[
            "JOHN", "JAMES", "ROBERT", "MICHAEL", "WILLIAM", "DAVID", "RICHARD", "THOMAS",
            "MARY", "PATRICIA", "JENNIFER", "LINDA", "ELIZABETH", "SARAH", "EMILY", "KAREN",
        ],
        Lang::De => &[
            "HANS", "KLAUS", "JUERGEN", "WOLFGANG", "MONIKA", "URSULA", "SABINE", "PETRA",
            "DIETER", "MANFRED",
        ],
        Lang::Es => &[
            "CARLOS", "JOSE", "JUAN", "LUIS", "MIGUEL", "ANTONIO", "MARIA", "CARMEN",
            "ISABEL", "PILAR", "DOLORES", "JOSEFA",
        ],
        Lang::Fr => &[
            "PIERRE", "JEAN", "MICHEL", "ANDRE", "PHILIPPE", "MARIE", "JEANNE", "FRANCOISE",
            "MONIQUE", "CATHERINE", "RENE", "NICOLE",
        ],
    }
}

pub fn surnames(lang: Lang) -> &'static [&'static str] {
    match lang {
        Lang::En => &[
            "SMITH", "JOHNSON", "WILLIAMS", "BROWN", "JONES", "MILLER", "DAVIS", "WILSON",
            "COOPER", "REED", "HAYES", "BENNETT",
        ],
        Lang::De => &[
            "MUELLER", "SCHMIDT", "SCHNEIDER", "FISCHER", "WEBER", "MEYER", "WAGNER", "BECKER",
            "SCHULZ", "HOFFMANN", "KRAUSE", "LORENZ", "BRANDT", "VOGEL",
        ],
        Lang::Es => &[
            "GARCIA", "RODRIGUEZ", "GONZALEZ", "FERNANDEZ", "LOPEZ", "MARTINEZ", "SANCHEZ",
            "PEREZ", "NAVARRO", "IGLESIAS", "CASTILLO",
        ],
        Lang::Fr => &[
            "MARTIN", "BERNARD", "DUBOIS", "PETIT", "DURAND", "LEROY", "MOREAU", "GARNIER",
            "ROUSSEAU", "CHEVALIER",
        ],
    }
}

/// (bank name, 8-char BIC). Names overlap only partially with the bank
/// gazetteer file.
pub const BANKS: &[(&str, &str)] = &[
    ("DEUTSCHE BANK", "DEUTDEFF"),
    ("COMMERZBANK", "COBADEFF"),
    ("BNP PARIBAS", "BNPAFRPP"),
    ("SOCIETE GENERALE", "SOGEFRPP"),
    ("CREDIT AGRICOLE", "AGRIFRPP"),
    ("BANCO SANTANDER", "BSCHESMM"),
    ("BBVA", "BBVAESMM"),
    ("CAIXABANK", "CAIXESBB"),
    ("UNICREDIT", "UNCRITMM"),
    ("INTESA SANPAOLO", "BCITITMM"),
    ("ING BANK", "INGBNL2A"),
    ("ABN AMRO", "ABNANL2A"),
    ("RABOBANK", "RABONL2U"),
    ("BARCLAYS", "BARCGB22"),
    ("HSBC", "HBUKGB4B"),
    ("LLOYDS BANK", "LOYDGB2L"),
    ("NATWEST", "NWBKGB2L"),
    ("STANDARD CHARTERED", "SCBLGB2L"),
    ("UBS", "UBSWCHZH"),
    ("JULIUS BAER", "BAERCHZZ"),
    ("JPMORGAN CHASE", "CHASUS33"),
    ("BANK OF AMERICA", "BOFAUS3N"),
    ("CITIBANK", "CITIUS33"),
    ("WELLS FARGO", "WFBIUS6S"),
    ("NORDEA", "NDEASESS"),
    ("DANSKE BANK", "DABADKKK"),
    ("SWEDBANK", "SWEDSESS"),
    ("DNB BANK", "DNBANOKK"),
    ("RAIFFEISEN BANK", "RZBAATWW"),
    ("ERSTE BANK", "GIBAATWW"),
    ("KBC BANK", "KREDBEBB"),
    ("MIZUHO BANK", "MHCBJPJT"),
    ("MUFG BANK", "BOTKJPJT"),
    ("BANK OF CHINA", "BKCHCNBJ"),
    ("DBS BANK", "DBSSSGSG"),
    ("OCBC BANK", "OCBCSGSG"),
    ("ANZ BANK", "ANZBAU3M"),
    ("WESTPAC", "WPACAU2S"),
    ("SCOTIABANK", "NOSCCATT"),
    // Not in the gazetteer file:
    ("BANCO POPULAR", "POPUESMM"),
    ("VOLKSBANK", "VBOEATWW"),
    ("LANDESBANK BERLIN", "BELADEBE"),
    ("BANQUE POSTALE", "PSSTFRPP"),
    ("METRO BANK", "MYMBGB2L"),
    ("ALPHA BANK", "CRBAGRAA"),
];

/// (city, country) pairs; a minority of cities are absent from the
/// gazetteer file.
pub const CITIES: &[(&str, &str)] = &[
    ("LONDON", "UNITED KINGDOM"),
    ("MANCHESTER", "UNITED KINGDOM"),
    ("EDINBURGH", "UNITED KINGDOM"),
    ("LEEDS", "UNITED KINGDOM"),
    ("BRISTOL", "UNITED KINGDOM"),
    ("PARIS", "FRANCE"),
    ("LYON", "FRANCE"),
    ("MARSEILLE", "FRANCE"),
    ("NANTES", "FRANCE"),
    ("LILLE", "FRANCE"),
    ("BERLIN", "GERMANY"),
    ("MUNICH", "GERMANY"),
    ("HAMBURG", "GERMANY"),
    ("FRANKFURT", "GERMANY"),
    ("COLOGNE", "GERMANY"),
    ("STUTTGART", "GERMANY"),
    ("BREMEN", "GERMANY"),
    ("DRESDEN", "GERMANY"),
    ("MADRID", "SPAIN"),
    ("BARCELONA", "SPAIN"),
    ("VALENCIA", "SPAIN"),
    ("SEVILLE", "SPAIN"),
    ("BILBAO", "SPAIN"),
    ("ROME", "ITALY"),
    ("MILAN", "ITALY"),
    ("TURIN", "ITALY"),
    ("GENOA", "ITALY"),
    ("NAPLES", "ITALY"),
    ("AMSTERDAM", "NETHERLANDS"),
    ("ROTTERDAM", "NETHERLANDS"),
    ("BRUSSELS", "BELGIUM"),
    ("ANTWERP", "BELGIUM"),
    ("VIENNA", "AUSTRIA"),
    ("GRAZ", "AUSTRIA"),
    ("ZURICH", "SWITZERLAND"),
    ("GENEVA", "SWITZERLAND"),
    ("LISBON", "PORTUGAL"),
    ("PORTO", "PORTUGAL"),
    ("DUBLIN", "IRELAND"),
    ("WARSAW", "POLAND"),
    ("KRAKOW", "POLAND"),
    ("PRAGUE", "CZECH REPUBLIC"),
    ("STOCKHOLM", "SWEDEN"),
    ("OSLO", "NORWAY"),
    ("COPENHAGEN", "DENMARK"),
    ("HELSINKI", "FINLAND"),
    ("NEW YORK", "UNITED STATES"),
    ("BOSTON", "UNITED STATES"),
    ("CHICAGO", "UNITED STATES"),
    ("TORONTO", "CANADA"),
    ("SINGAPORE", "SINGAPORE"),
    ("TOKYO", "JAPAN"),
    ("LUXEMBOURG", "LUXEMBOURG"),
];

pub fn streets(lang: Lang) -> &'static [&'static str] {
    match lang {
        Lang::En => &[
            "MAIN STREET", "HIGH STREET", "STATION ROAD", "CHURCH LANE", "PARK AVENUE",
            "KING STREET", "QUEEN STREET", "MARKET SQUARE",
        ],
        Lang::De => &[
            "HAUPTSTRASSE", "BAHNHOFSTRASSE", "GARTENWEG", "SCHILLERSTRASSE", "GOETHESTRASSE",
            "RINGSTRASSE",
        ],
        Lang::Es => &["CALLE MAYOR", "AVENIDA CENTRAL", "PLAZA NUEVA", "CALLE REAL"],
        Lang::Fr => &["RUE DE LA PAIX", "AVENUE VICTOR HUGO", "BOULEVARD SAINT MICHEL", "RUE NATIONALE"],
    }
}

pub fn purposes(lang: Lang) -> &'static [&'static str] {
    match lang {
        Lang::En => &[
            "INVOICE PAYMENT", "SALARY TRANSFER", "RENT PAYMENT", "CONSULTING FEES",
            "TUITION FEES", "LOAN REPAYMENT", "DIVIDEND PAYOUT", "MEDICAL EXPENSES",
            "CHARITY DONATION", "SUBSCRIPTION RENEWAL", "HOTEL BOOKING", "FLIGHT REFUND",
            "EQUIPMENT PURCHASE", "SOFTWARE LICENSE", "MAINTENANCE CONTRACT", "FREIGHT CHARGES",
            "INSURANCE PREMIUM", "TAX PAYMENT", "ROYALTY PAYMENT", "COMMISSION SETTLEMENT",
        ],
        Lang::De => &[
            "RECHNUNG", "GEHALT", "MIETE", "BERATUNGSHONORAR", "SPENDE", "KAUTION",
            "NEBENKOSTEN", "VERSICHERUNGSBEITRAG", "WARTUNGSVERTRAG", "STUDIENGEBUEHREN",
        ],
        Lang::Es => &[
            "PAGO DE FACTURA", "NOMINA", "ALQUILER", "DONACION", "MATRICULA",
            "PRIMA DE SEGURO", "HONORARIOS",
        ],
        Lang::Fr => &[
            "PAIEMENT FACTURE", "SALAIRE", "LOYER", "DON", "FRAIS DE SCOLARITE",
            "PRIME ASSURANCE", "HONORAIRES",
        ],
    }
}

/// Administrative filler vocabulary that is never part of an entity.
pub const GLUE: &[&str] = &[
    "URGENT", "ATTN", "PLEASE QUOTE", "SEE ATTACHED", "PER AGREEMENT", "AS AGREED",
    "DO NOT CONVERT", "THANK YOU", "PROCESSED", "VALUE TODAY",
];

pub const COMPANY_SUFFIXES: &[&str] = &[
    "GMBH", "AG", "KG", "LTD", "LIMITED", "PLC", "LLC", "INC", "CORP", "SA", "SARL", "SL",
    "BV", "NV", "SPA", "OY", "AB",
];

pub const TRADE_WORDS: &[&str] = &[
    "TRADING", "LOGISTICS", "CONSULTING", "ENGINEERING", "SOLUTIONS", "SERVICES", "HOLDINGS",
    "INDUSTRIES", "SYSTEMS", "TEXTILES", "PHARMA", "MOTORS", "GLOBAL", "NORDWIND", "ATLAS",
    "MERIDIAN", "PINNACLE", "VERTEX", "ORION", "AURORA",
];

/// Nested-organization templates: `{prefix}{CITY}` where the city is an
/// inner LOCATION span.
pub const BANK_OF_PREFIXES: &[&str] = &["BANK OF ", "BANCO DE ", "BANQUE DE ", "CREDIT "];

/// IBAN country shapes: (country code, BBAN spec). Each spec entry is
/// (letter_count, digit_count) emitted in order.
pub const IBAN_SHAPES: &[(&str, &[(usize, usize)])] = &[
    ("DE", &[(0, 18)]),
    ("GB", &[(4, 14)]),
    ("FR", &[(0, 10), (5, 0), (0, 8)]),
    ("ES", &[(0, 20)]),
    ("NL", &[(4, 10)]),
    ("IT", &[(1, 10), (6, 0), (0, 6)]),
    ("BE", &[(0, 12)]),
    ("AT", &[(0, 16)]),
    ("CH", &[(0, 17)]),
    ("PL", &[(0, 24)]),
    ("PT", &[(0, 21)]),
    ("IE", &[(4, 14)]),
];

pub const CURRENCIES_COMMON: &[&str] =
    &["EUR", "USD", "GBP", "CHF", "SEK", "NOK", "DKK", "PLN", "JPY", "CAD", "AUD", "SGD"];
