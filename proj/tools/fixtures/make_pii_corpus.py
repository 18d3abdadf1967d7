"""Regenerate tests/fixtures/pii_corpus.jsonl.

Spans are computed from the inserted values, not from the detector.
"""
import json
import random
import sys

rng = random.Random(20261017)


def luhn_complete(prefix):
    digits = [int(c) for c in prefix]
    for check in range(10):
        total = 0
        for i, d in enumerate(reversed(digits + [check])):
            if i % 2:
                d *= 2
                if d > 9:
                    d -= 9
            total += d
        if total % 10 == 0:
            return prefix + str(check)
    raise AssertionError


def card(length, sep):
    body = luhn_complete(str(rng.choice([4, 5, 3, 6])) + "".join(str(rng.randrange(10)) for _ in range(length - 2)))
    if sep is None:
        return body
    return sep.join(body[i:i + 4] for i in range(0, len(body), 4))


def phone():
    a, b, c = rng.randrange(200, 999), rng.randrange(200, 999), rng.randrange(10000)
    return rng.choice(["{}-{}-{:04d}", "({}) {}-{:04d}", "{}.{}.{:04d}", "+1 {} {} {:04d}", "1-{}-{}-{:04d}"]).format(a, b, c)


def ssn():
    return "{:03d}-{:02d}-{:04d}".format(rng.randrange(1, 900), rng.randrange(1, 100), rng.randrange(1, 10000))


def email():
    user = rng.choice(["maria.lopez", "j_smith", "dev+ci", "k.okafor", "amina"])
    host = rng.choice(["example.org", "mail.example.com", "uni-research.ac.uk", "corp.example.net"])
    return user + "@" + host


TEMPLATES = [
    ("Email", "Please reach me at {} after the review.", email),
    ("Email", "{}", email),
    ("Email", "cc: {}, thanks", email),
    ("PhoneNumber", "Call the clinic on {} tomorrow.", phone),
    ("PhoneNumber", "phone {}", phone),
    ("NationalId", "My SSN is {} if you need it.", ssn),
    ("NationalId", "id={};", ssn),
    ("PaymentCard", "Card number {} expires soon.", lambda: card(16, " ")),
    ("PaymentCard", "charged to {}", lambda: card(16, None)),
    ("PaymentCard", "old card {} was cancelled", lambda: card(15, None)),
    ("PaymentCard", "use {} for the deposit", lambda: card(16, "-")),
]

lines = []
for i in range(27):
    kind, template, make = TEMPLATES[i % len(TEMPLATES)]
    value = make()
    text = template.format(value)
    start = text.index(value)
    lines.append({"text": text, "labels": [{"kind": kind, "start": start, "end": start + len(value)}]})

# Mixed lines with two findings.
for _ in range(3):
    e, p = email(), phone()
    text = "Contact {} or {} for access.".format(e, p)
    es, ps = text.index(e), text.index(p)
    lines.append({"text": text, "labels": [{"kind": "Email", "start": es, "end": es + len(e)},
                                           {"kind": "PhoneNumber", "start": ps, "end": ps + len(p)}]})

NEGATIVES = [
    "",
    "Step 4 depends on steps 1 and 3.",
    "The meeting is on 2024-05-17 at 10:30.",
    "Version 1.12.3 fixed the tokenizer.",
    "write to maria at example dot org",
    "the handle @dialect_fairness posted again",
    "a@b is not an address",
    "user@localhost cannot receive mail",
    "Card 4111 1111 1111 1112 fails the checksum.",
    "Order 123456789012 shipped.",
    "Reference 12345678901234567890 is too long for a card.",
    "Phone 555-1234 lacks an area code.",
    "Dial 12-345-6789 for nothing.",
    "Number 123-456-78901 has too many digits.",
    "Serial 123-45-67890 is not an id.",
    "Code 1234-56-7890 has the wrong grouping.",
    "Ticket #123-45 closed.",
    "Accuracy rose from 81.5% to 87.25%.",
    "ISBN 978-3-16-148410-0 is cited.",
    "The ratio was 3:2:1 across dialects.",
    "Coordinates 40.7128, -74.0060 were logged.",
    "Perplexity 23.4 vs 19.8 on the held-out set.",
    "IP 192.168.10.254 was blocked.",
    "Use the [Step 5] marker for augmentation.",
    "Totals: 1 2 3 4 5 6 7 8 9 0 1 2 3",
    "email me later",
    "x@y.z is too short a domain",
    "Version string 4111-1111-1111-111 is truncated.",
    "Hex id 0x1A2B3C4D5E6F was logged.",
    "The call lasted 120 minutes and cost 45 dollars.",
]
assert len(NEGATIVES) == 30
lines += [{"text": t, "labels": []} for t in NEGATIVES]

out = sys.argv[1] if len(sys.argv) > 1 else "tests/fixtures/pii_corpus.jsonl"
with open(out, "w", encoding="ascii") as f:
    for line in lines:
        f.write(json.dumps(line) + "\n")
