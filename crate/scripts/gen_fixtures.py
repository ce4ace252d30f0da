#!/usr/bin/env python3
"""Regenerates the bundled fixture corpora under data/.

Sentences are written with inline markup `[surface|CUI]`; the generator strips
the markup, records character offsets (Unicode scalar values) and writes
JSONL documents plus gold annotations. Output is fully determined by SEED.
"""
import json
import random
import re
from pathlib import Path

SEED = 20200515
DATA = Path(__file__).resolve().parent.parent / "data"

TEMPLATES = [
    "The child caught a [cold|C-commoncold] from classmates and stayed home sneezing.",
    "Her [cold|C-commoncold] brought congestion, a sore throat and sneezing for days.",
    "A viral [cold|C-commoncold] usually resolves with rest and fluids.",
    "He developed a [head cold|C-commoncold] with nasal congestion.",
    "Prolonged exposure to [cold|C-coldtemp] during the winter expedition caused frostbite.",
    "Samples were kept in the [cold|C-coldtemp] at minus twenty degrees.",
    "Extreme [cold|C-coldtemp] and wind chill froze the mountain pass.",
    "The pharmacist dispensed [cold|C-coldbrand] capsules with a dosing card.",
    "She swallowed two [Coldex|C-coldbrand] capsules before bed.",
    "Shaking and feeling [cold|C-chills] under blankets, he asked for a nurse.",
    "The [patient|C-patient] reported a persistent [cough|C-cough] and wheezing at night.",
    "A dry [cough|C-cough] with sputum suggested bronchitis.",
    "Take ten millilitres of [cough|C-coughmed] liquid orally with meals.",
    "She bought a bottle of [cough syrup|C-coughmed] at the pharmacy.",
    "After recovery she was ready for [discharge|C-discharge-patient] from the ward.",
    "Yellow [discharge|C-discharge-body] oozed from the wound dressing.",
    "The [hospital|C-hospital-org] scheduled his [discharge|C-discharge-patient] for Monday.",
    "A blood [culture|C-culture-lab] grew gram-positive cocci.",
    "Sputum [cultures|C-culture-lab] were incubated in the microbiology lab.",
    "Beliefs about illness vary with [culture|C-culture-social] and religion.",
    "Her [depression|C-depression-mental] improved after psychotherapy and antidepressants.",
    "Low mood, insomnia and [anxiety|C-anxiety] accompanied his [depression|C-depression-mental].",
    "Rainwater pooled in a shallow [depression|C-depression-spatial] of the terrain.",
    "Children in old houses face [lead|C-lead-metal] poisoning from paint chips.",
    "Blood [lead|C-lead-metal] levels exceeded the safety limit.",
    "The technician reattached a loose [lead|C-lead-ecg] on the chest electrode.",
    "A drug-eluting [stent|C-stent] was placed in the coronary artery.",
    "She injects [insulin|C-insulin] before meals to control [diabetes|C-diabetes].",
    "Mutations in the [insulin|C-insulin-gene] locus on chromosome eleven alter transcription.",
    "Carriers of [BRCA1|C-brca1] mutations undergo genetic counselling.",
    "Researchers conjugated [OX7-SAP|C-ox7sap] to target neurons.",
    "He takes [aspirin|C-asp] daily to prevent clots.",
    "She was started on [low-dose aspirin|C-lowdoseasp] after the stroke.",
    "Binge drinking of [alcohol|C-ethanol] damages the [liver|C-liver].",
    "Oranges are rich in [vitamin C|C-vitc].",
    "Poorly controlled [diabetes|C-diabetes] and [hypertension|C-hypertension] raise cardiovascular risk.",
    "Biopsy confirmed a malignant [tumor|C-tumor] in the [liver|C-liver].",
    "Chemotherapy was given for metastatic [cancer|C-cancer].",
    "Systemic [inflammation|C-inflammation] progressed to [sepsis|C-sepsis] in intensive care.",
    "A fall from a ladder caused a [fracture|C-fracture] of the wrist.",
    "A sports [injury|C-injury] kept him off the field.",
    "The [patient|C-patient] had unintended [weight loss|C-weightloss] and night sweats.",
    "Cardiac [surgery|C-surgery-proc] repaired the valve of the [heart|C-heart].",
    "She chose a career in [surgery|C-surgery-field] after medical school.",
    "Referral to [cardiology|C-cardiology] was arranged.",
    "A routine [blood test|C-bloodtest] was unremarkable.",
    "Daily [exercise|C-exercise] like jogging and swimming keeps her fit.",
    "Supervised [exercise|C-exercise-therapy] sessions were prescribed for rehabilitation.",
    "Cigarette [smoking|C-smoking] increases the risk of lung disease.",
    "Short-term [memory|C-memory] declined with age.",
    "[Blood pressure|C-bloodpressure] was measured at rest.",
    "The throat swab was [positive|C-positive-result] for streptococcus.",
    "The outlook remained [positive|C-positive-qual] and encouraging.",
    "She had a [severe|C-severe] reaction to the dye.",
    "Renal [function|C-function] was preserved.",
    "Symptoms lasted two [weeks|C-week].",
    "[Staph|C-staph] bacteria colonized the catheter.",
    "He ate an [apple|C-apple-food] for lunch.",
    "The [apple|C-apple-plant] orchard blossomed in spring.",
    "The [hospital|C-hospital-building] roof was damaged by the storm.",
    "The [hospital|C-hospital-org] hired new nurses and expanded services.",
    "Volunteers from the [Red Cross|C-redcross] delivered supplies.",
    "[Fever|C-fever] and [headache|C-headache] began suddenly.",
    "She felt feverish with [chills|C-chills] at night.",
    "The manufacturer issued a product recall for the device.",
]

MARK = re.compile(r"\[([^|\]]+)\|([^\]]+)\]")


def render(sentences):
    text = ""
    spans = []
    for i, sent in enumerate(sentences):
        if i:
            text += " "
        pos = 0
        for m in MARK.finditer(sent):
            text += sent[pos:m.start()]
            start = len(text)
            text += m.group(1)
            spans.append((start, len(text), m.group(1), m.group(2)))
            pos = m.end()
        text += sent[pos:]
    return text, spans


def load_lexicon():
    names = {}
    for line in (DATA / "toy_lexicon.tsv").read_text().splitlines():
        if line.startswith("#") or not line.strip():
            continue
        cui, pref, *_ = line.split("\t")
        names[cui] = pref
    return names


def norm(s):
    return " ".join(t.strip(".,;:!?()[]'\"").lower() for t in s.split() if t.strip(".,;:!?()[]'\""))


def write_jsonl(path, rows):
    with open(path, "w") as f:
        for r in rows:
            f.write(json.dumps(r, ensure_ascii=False) + "\n")


def main():
    rng = random.Random(SEED)
    names = load_lexicon()

    # Main ambiguity corpus: every template appears at least twice.
    order = list(range(len(TEMPLATES))) * 2
    order += [rng.randrange(len(TEMPLATES)) for _ in range(150)]
    rng.shuffle(order)
    docs, gold = [], []
    for d in range(0, len(order), 4):
        doc_id = f"doc{d // 4:03d}"
        text, spans = render([TEMPLATES[i] for i in order[d:d + 4]])
        docs.append({"id": doc_id, "text": text})
        for s, e, _, cui in spans:
            gold.append({"doc_id": doc_id, "start": s, "end": e, "cui": cui})
    write_jsonl(DATA / "fixture_docs.jsonl", docs)
    write_jsonl(DATA / "fixture_gold.jsonl", gold)

    # Headed corpus: headings are the preferred names of the gold concepts, plus
    # one distractor and one heading whose cui is unknown to the lexicon.
    headed, headed_gold = [], []
    for d in range(30):
        while True:
            picks = rng.sample(range(len(TEMPLATES)), 3)
            text, spans = render([TEMPLATES[i] for i in picks])
            seen = {}
            ok = all(seen.setdefault(norm(surf), cui) == cui for _, _, surf, cui in spans)
            if ok:
                break
        doc_id = f"pm{d:03d}"
        cuis = sorted({cui for *_, cui in spans})
        headings = [{"name": names[c], "cui": c} for c in cuis]
        headings.append({"name": names["C-week"], "cui": "C-week"})
        if d % 10 == 0:
            headings.append({"name": "Mystery Syndrome", "cui": "C-notinlexicon"})
        headed.append({"id": doc_id, "text": text, "headings": headings})
        for s, e, _, cui in spans:
            headed_gold.append({"doc_id": doc_id, "start": s, "end": e, "cui": cui})
    write_jsonl(DATA / "headed_docs.jsonl", headed)
    write_jsonl(DATA / "headed_gold.jsonl", headed_gold)

    # Hyperlinked corpus with a page-key crosswalk.
    keys = {c: n.replace(" ", "_") for c, n in names.items()}
    crosswalk = {keys[c]: c for c in sorted(names)}
    crosswalk["Obscure_article"] = "C-notinlexicon"
    linked = []
    for d in range(12):
        picks = rng.sample(range(len(TEMPLATES)), 3)
        text, spans = render([TEMPLATES[i] for i in picks])
        links = []
        for j, (s, e, _, cui) in enumerate(spans):
            key = keys.get(cui, cui)
            if j == 0 and d % 4 == 0:
                key = "Unmapped_page"
            if j == 0 and d % 4 == 1:
                key = "Obscure_article"
            links.append({"start": s, "end": e, "page_key": key})
        linked.append({"id": f"wiki{d:03d}", "text": text, "links": links})
    write_jsonl(DATA / "linked_docs.jsonl", linked)
    with open(DATA / "crosswalk.tsv", "w") as f:
        f.write("# page_key<TAB>cui\n")
        for k in sorted(crosswalk):
            f.write(f"{k}\t{crosswalk[k]}\n")

    print(f"{len(docs)} docs, {len(gold)} gold mentions, {len(headed)} headed docs, {len(linked)} linked docs")


if __name__ == "__main__":
    main()
