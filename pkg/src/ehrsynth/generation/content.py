"""Clinical content tables backing the grammar backend and the reference corpus.

All lists are documented fixtures for synthetic-data generation, not clinical
ground truth.
"""
from __future__ import annotations

FIRST_NAMES = (
    "Aaliyah", "Aiden", "Alma", "Amara", "Andre", "Anika", "Asha", "Benjamin",
    "Carlos", "Chen", "Dario", "Dmitri", "Elena", "Emeka", "Fatima", "Gabriel",
    "Hana", "Hiroshi", "Imani", "Ingrid", "Jamal", "Jia", "Jonas", "Kai",
    "Kalinda", "Leila", "Liam", "Lucia", "Malik", "Maria", "Mateo", "Mei",
    "Nadia", "Noah", "Olivia", "Omar", "Priya", "Quinn", "Ravi", "Rosa",
    "Samuel", "Sofia", "Tariq", "Thandiwe", "Ula", "Viktor", "Wanjiru", "Xiomara",
    "Yusuf", "Zoe",
)

LAST_NAMES = (
    "Abara", "Adeyemi", "Almeida", "Anderson", "Bauer", "Bergström", "Chen",
    "Cohen", "Diallo", "Dubois", "Fernandez", "Garcia", "Gonzalez", "Gupta",
    "Haddad", "Hernandez", "Ivanov", "Jackson", "Johnson", "Kim", "Kowalski",
    "Lee", "Lopez", "Martin", "Mbeki", "Miller", "Nakamura", "Nguyen", "Novak",
    "Okafor", "Oliveira", "Osei", "Park", "Patel", "Petrov", "Ramirez", "Rossi",
    "Santos", "Schmidt", "Silva", "Singh", "Smith", "Suzuki", "Tanaka", "Torres",
    "Varga", "Wang", "Williams", "Yilmaz", "Zhang",
)

STREETS = (
    "Alder Street", "Birch Avenue", "Cedar Lane", "Dogwood Court", "Elm Street",
    "Fir Road", "Hawthorn Drive", "Juniper Way", "Linden Boulevard", "Magnolia Place",
    "Maple Avenue", "Oak Street", "Pine Crescent", "Rowan Terrace", "Spruce Street",
    "Sycamore Road", "Walnut Drive", "Willow Lane",
)

CITIES_BY_REGION = {
    "midwest": ("Columbus", "Des Moines", "Madison", "Minneapolis", "Omaha"),
    "northeast": ("Albany", "Boston", "Hartford", "Portland", "Providence"),
    "south": ("Atlanta", "Austin", "Charlotte", "Memphis", "Richmond"),
    "west": ("Boise", "Denver", "Sacramento", "Seattle", "Tucson"),
}

DEPARTMENT_NAMES = {
    "cardiology": "Cardiology",
    "emergency": "Emergency Medicine",
    "general_medicine": "General Medicine",
    "neurology": "Neurology",
    "oncology": "Oncology",
    "orthopedics": "Orthopedics",
    "pediatrics": "Pediatrics",
    "surgery": "Surgery",
}

# condition -> (icd code, complaint phrase, treatments, advice)
CONDITIONS = {
    "asthma": ("J45.909", "shortness of breath and wheezing",
               ("albuterol", "fluticasone", "montelukast"),
               "use the rescue inhaler as directed and avoid known triggers"),
    "atrial fibrillation": ("I48.91", "palpitations and fatigue",
                            ("metoprolol", "apixaban", "diltiazem"),
                            "monitor the pulse daily and report palpitations"),
    "cellulitis": ("L03.90", "localized redness and swelling of the skin",
                   ("cephalexin", "clindamycin", "ceftriaxone"),
                   "elevate the affected limb and complete the antibiotic course"),
    "chronic kidney disease": ("N18.30", "swelling of the legs and fatigue",
                               ("lisinopril", "furosemide", "sodium bicarbonate"),
                               "limit dietary sodium and follow up on kidney function"),
    "chronic obstructive pulmonary disease": ("J44.9", "chronic cough with sputum",
                                              ("tiotropium", "albuterol", "prednisone"),
                                              "stop smoking and use the prescribed inhalers"),
    "community acquired pneumonia": ("J18.9", "productive cough and fever",
                                     ("amoxicillin", "azithromycin", "ceftriaxone"),
                                     "rest, take fluids, and finish all antibiotics"),
    "congestive heart failure": ("I50.9", "breathlessness when lying flat",
                                 ("furosemide", "carvedilol", "lisinopril"),
                                 "weigh daily and restrict fluid intake"),
    "coronary artery disease": ("I25.10", "exertional chest pressure",
                                ("aspirin", "atorvastatin", "metoprolol"),
                                "take medications daily and report chest pain"),
    "depression": ("F32.9", "low mood and poor sleep",
                   ("sertraline", "fluoxetine", "bupropion"),
                   "continue counseling and take medication every morning"),
    "gastroesophageal reflux": ("K21.9", "burning chest discomfort after meals",
                                ("omeprazole", "famotidine", "pantoprazole"),
                                "avoid late meals and elevate the head of the bed"),
    "hyperlipidemia": ("E78.5", "no acute complaint at screening",
                       ("atorvastatin", "rosuvastatin", "ezetimibe"),
                       "follow a low fat diet and recheck lipids in three months"),
    "hypertension": ("I10", "headache and elevated blood pressure",
                     ("lisinopril", "amlodipine", "hydrochlorothiazide"),
                     "check blood pressure at home and reduce salt intake"),
    "hypothyroidism": ("E03.9", "fatigue and cold intolerance",
                       ("levothyroxine",),
                       "take levothyroxine on an empty stomach each morning"),
    "iron deficiency anemia": ("D50.9", "fatigue and pallor",
                               ("ferrous sulfate",),
                               "take iron with vitamin C and recheck blood counts"),
    "migraine": ("G43.909", "recurrent throbbing headache with nausea",
                 ("sumatriptan", "propranolol", "topiramate"),
                 "keep a headache diary and avoid identified triggers"),
    "osteoarthritis": ("M19.90", "joint pain worse with activity",
                       ("ibuprofen", "naproxen", "acetaminophen"),
                       "stay active with low impact exercise and apply heat"),
    "otitis media": ("H66.90", "ear pain and decreased hearing",
                     ("amoxicillin", "cefdinir", "ibuprofen"),
                     "finish the antibiotics and return if fever persists"),
    "pyelonephritis": ("N10", "flank pain with fever and dysuria",
                       ("ciprofloxacin", "ceftriaxone", "sulfamethoxazole"),
                       "drink plenty of fluids and complete the antibiotic course"),
    "sinusitis": ("J01.90", "facial pressure and nasal congestion",
                  ("amoxicillin", "fluticasone", "pseudoephedrine"),
                  "use saline rinses and finish the prescribed course"),
    "type 2 diabetes": ("E11.9", "increased thirst and frequent urination",
                        ("metformin", "glipizide", "insulin glargine"),
                        "check fasting glucose daily and follow the meal plan"),
    "urinary tract infection": ("N39.0", "burning with urination",
                                ("nitrofurantoin", "sulfamethoxazole", "cephalexin"),
                                "increase fluid intake and complete the antibiotics"),
    "viral gastroenteritis": ("A08.4", "nausea, vomiting, and diarrhea",
                              ("ondansetron", "oral rehydration salts"),
                              "take small sips of fluid and advance diet slowly"),
}

CONDITION_NAMES = tuple(sorted(CONDITIONS))

# every medication a grammar patient can receive
ALL_MEDICATIONS = tuple(sorted({m for _, _, meds, _ in CONDITIONS.values() for m in meds}))

SURGERIES = (
    "appendectomy", "cataract extraction", "cesarean section", "cholecystectomy",
    "hernia repair", "hip replacement", "knee arthroscopy", "tonsillectomy",
    "carpal tunnel release", "coronary stent placement",
)

FAMILY_CONDITIONS = (
    "coronary artery disease", "type 2 diabetes", "hypertension", "breast cancer",
    "colon cancer", "stroke", "asthma", "glaucoma", "osteoporosis", "depression",
)

# allergens: drug allergens resolve through the consistency drug-class map;
# environmental allergens never conflict with a medication
DRUG_ALLERGENS = (
    "penicillin", "amoxicillin", "sulfamethoxazole", "ibuprofen", "aspirin",
    "cephalexin", "azithromycin", "naproxen",
)
ENVIRONMENTAL_ALLERGENS = (
    "peanuts", "shellfish", "latex", "pollen", "dust mites", "bee venom",
    "eggs", "tree nuts", "contrast dye", "nickel",
)
ALL_ALLERGENS = DRUG_ALLERGENS + ENVIRONMENTAL_ALLERGENS

DOSAGES = ("5 mg", "10 mg", "20 mg", "25 mg", "40 mg", "50 mg", "100 mg", "250 mg", "500 mg")

WARD_NAMES = ("East Wing", "North Wing", "South Wing", "West Wing", "Annex", "Tower")

INSURANCE_PROVIDERS = (
    "Aetna Select", "BlueShield Plus", "Cascade Health", "Harbor Mutual",
    "Lakeside Care", "Meridian Assurance",
)

NOTE_OPENERS = (
    "the patient was seen in clinic today",
    "the patient returns for follow up",
    "the patient presented for evaluation",
    "the patient was reviewed on rounds",
)

NOTE_PLANS = (
    "will continue the current plan and review at the next visit",
    "medication adjusted and follow up arranged in two weeks",
    "supportive care advised with return precautions reviewed",
    "referral placed and home monitoring instructions given",
)

LOG_DETAILS = {
    "check_in": "patient checked in at the front desk",
    "check_out": "patient checked out after the encounter",
    "consultation": "consultation completed with the attending team",
    "procedure": "bedside procedure performed without complication",
    "transfer": "patient transferred between care areas",
    "triage": "triage assessment completed by nursing staff",
}
