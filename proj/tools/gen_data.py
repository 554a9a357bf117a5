#!/usr/bin/env python3
"""Regenerates the packaged JSON-lines datasets under data/ from the hand-curated tables below."""
import json
import os

OUT = os.path.join(os.path.dirname(__file__), "..", "data")

CAPITALS = [
    ("Canada", "Ottawa"), ("Australia", "Canberra"), ("Brazil", "Brasília"), ("China", "Beijing"),
    ("France", "Paris"), ("Germany", "Berlin"), ("India", "New Delhi"), ("Italy", "Rome"),
    ("Japan", "Tokyo"), ("Mexico", "Mexico City"), ("Russia", "Moscow"), ("South Africa", "Pretoria"),
    ("South Korea", "Seoul"), ("Spain", "Madrid"), ("Turkey", "Ankara"), ("United Kingdom", "London"),
    ("United States", "Washington, D.C."), ("Argentina", "Buenos Aires"), ("Egypt", "Cairo"),
    ("Nigeria", "Abuja"), ("Sweden", "Stockholm"), ("Norway", "Oslo"), ("Denmark", "Copenhagen"),
    ("Finland", "Helsinki"), ("Poland", "Warsaw"), ("Ukraine", "Kyiv"), ("Netherlands", "Amsterdam"),
    ("Belgium", "Brussels"), ("Austria", "Vienna"), ("Switzerland", "Bern"), ("Portugal", "Lisbon"),
    ("Greece", "Athens"), ("Hungary", "Budapest"), ("Czech Republic", "Prague"), ("Romania", "Bucharest"),
    ("Thailand", "Bangkok"), ("Vietnam", "Hanoi"), ("Malaysia", "Kuala Lumpur"), ("Singapore", "Singapore"),
    ("Indonesia", "Jakarta"), ("Saudi Arabia", "Riyadh"), ("Israel", "Jerusalem"), ("Chile", "Santiago"),
    ("Colombia", "Bogotá"), ("Peru", "Lima"), ("New Zealand", "Wellington"), ("Ireland", "Dublin"),
    ("Pakistan", "Islamabad"), ("Bangladesh", "Dhaka"), ("Philippines", "Manila"),
]

COLORS = [
    ("Apple", "red"), ("Banana", "yellow"), ("Cherry", "red"), ("Lemon", "yellow"), ("Sky", "blue"),
    ("Grass", "green"), ("Grape", "purple"), ("Orange", "orange"), ("Strawberry", "red"),
    ("Blueberry", "blue"), ("Cloud", "white"), ("Rose", "red"), ("Sunflower", "yellow"), ("Snow", "white"),
    ("Coal", "black"), ("Pumpkin", "orange"), ("Water", "blue"), ("Chocolate", "brown"), ("Gold", "gold"),
    ("Silver", "silver"), ("Carrot", "orange"), ("Lime", "green"), ("Eggplant", "purple"),
    ("Flamingo", "pink"), ("Ocean", "blue"), ("Forest", "green"), ("Cranberry", "red"), ("Peach", "pink"),
    ("Sunset", "orange"), ("Night", "black"), ("Butter", "yellow"), ("Olive", "green"), ("Sand", "yellow"),
    ("Violet", "purple"), ("Tangerine", "orange"), ("Cherry blossom", "pink"), ("Coral", "orange"),
    ("Ash", "grey"), ("Emerald", "green"), ("Sapphire", "blue"), ("Ruby", "red"), ("Cotton", "white"),
    ("Ivory", "white"), ("Charcoal", "black"), ("Peacock", "blue"), ("Jade", "green"), ("Amber", "orange"),
    ("Hazelnut", "brown"), ("Lavender", "purple"), ("Cinnamon", "brown"),
]

# (test, test_label, semantic, semantic_label, lexical, lexical_label)
SST2 = [
    ("The soundtrack enriches the entire movie.", "Positive",
     "The music significantly enhances the film's appeal.", "Positive",
     "The soundtrack diminishes the entire movie.", "Negative"),
    ("The actor's performance is truly mesmerizing.", "Positive",
     "The actor's portrayal captivates the audience completely.", "Positive",
     "The actor's performance is truly forgettable.", "Negative"),
    ("The plot twists were unexpected and thrilling.", "Positive",
     "The story developments were surprising and exciting.", "Positive",
     "The plot twists were predictable and dull.", "Negative"),
    ("The cinematography is breathtaking and innovative.", "Positive",
     "The visual direction offers stunning and groundbreaking visuals.", "Positive",
     "The cinematography is uninspiring and outdated.", "Negative"),
    ("The dialogue was witty and delightful.", "Positive",
     "The conversation was sharp and enjoyable.", "Positive",
     "The dialogue was humorless and disappointing.", "Negative"),
    ("The direction is masterful and precise.", "Positive",
     "The film's guidance shows exceptional skill and accuracy.", "Positive",
     "The direction is clumsy and imprecise.", "Negative"),
    ("The special effects are spectacular and memorable.", "Positive",
     "The visual effects stand out as extraordinary and unforgettable.", "Positive",
     "The special effects are unimpressive and forgettable.", "Negative"),
    ("The pacing keeps you engaged from start to finish.", "Positive",
     "The rhythm maintains your attention throughout the entire movie.", "Positive",
     "The pacing loses your interest from start to finish.", "Negative"),
    ("The characters are richly developed and relatable.", "Positive",
     "The portrayal of characters is deeply crafted and connects well with the audience.", "Positive",
     "The characters are poorly developed and unrelatable.", "Negative"),
    ("The film's creativity is both refreshing and inspiring.", "Positive",
     "The movie's originality offers a new and motivational perspective.", "Positive",
     "The film's creativity is both stale and uninspiring.", "Negative"),
    ("I despise this show for its lack of originality.", "Negative",
     "The series annoys me with its derivative content.", "Negative",
     "I adore this show despite its lack of originality.", "Positive"),
    ("The ending was predictable and boring.", "Negative",
     "The conclusion was foreseeable and tedious.", "Negative",
     "The ending was unpredictable and exciting.", "Positive"),
    ("Their service was slow and frustrating.", "Negative",
     "The customer service was sluggish and irritating.", "Negative",
     "Their service was quick and satisfying.", "Positive"),
    ("It's utterly pointless and dull.", "Negative",
     "Completely meaningless and uninteresting.", "Negative",
     "It's utterly purposeful and engaging.", "Positive"),
    ("The plot twists were contrived and unconvincing.", "Negative",
     "The storyline turns felt forced and unbelievable.", "Negative",
     "The plot twists were natural and convincing.", "Positive"),
    ("The movie was generally uninspiring.", "Negative",
     "The film rarely evoked any excitement.", "Negative",
     "The movie was generally inspiring.", "Positive"),
    ("The soundtrack is hardly noticeable.", "Negative",
     "You barely hear the music throughout.", "Negative",
     "The soundtrack is highly noticeable.", "Positive"),
    ("The pacing is slow and tedious.", "Negative",
     "The tempo drags and feels monotonous.", "Negative",
     "The pacing is quick and engaging.", "Positive"),
    ("The narrative lacks depth and coherence.", "Negative",
     "The story misses complexity and clarity.", "Negative",
     "The narrative has depth and coherence.", "Positive"),
    ("The performance was overly dramatic and false.", "Negative",
     "The acting was excessively theatrical and inauthentic.", "Negative",
     "The performance was subtly dramatic and genuine.", "Positive"),
]

EMO = [
    ("It seems like a regular day at the office.", "Others",
     "Just another normal workday.", "Others",
     "Today, the office feels unsettlingly quiet.", "Sad"),
    ("I need to go grocery shopping later.", "Others",
     "Later today, I have some grocery shopping to do.", "Others",
     "I'm frustrated about having to go grocery shopping later.", "Angry"),
    ("I'm so happy we're going on a vacation!", "Happy",
     "I'm thrilled about our upcoming vacation!", "Happy",
     "I'm stressed about all the packing needed for our vacation.", "Angry"),
    ("That birthday party was a blast!", "Happy",
     "I truly enjoyed the fun at that birthday party!", "Happy",
     "That birthday party was too loud and overwhelming for me.", "Sad"),
    ("Losing my pet has left me heartbroken.", "Sad",
     "I am deeply saddened by the loss of my pet.", "Sad",
     "Dealing with my pet's loss has made me irritable and upset.", "Angry"),
    ("It's so gloomy outside today, it makes me feel down.", "Sad",
     "The dreary weather today really dampens my spirits.", "Sad",
     "The gloomy weather outside is irritating.", "Angry"),
    ("I can't believe how unfair that decision was!", "Angry",
     "I'm really upset about that unjust decision!", "Angry",
     "That decision was so disappointing and unfair.", "Sad"),
    ("This constant noise is driving me crazy!", "Angry",
     "I'm getting furious over the incessant noise!", "Angry",
     "This constant noise is really getting on my nerves.", "Others"),
    ("I can't believe I got promoted at work!", "Happy",
     "I am so excited about my promotion at work!", "Happy",
     "I can't believe how stressed I am at work.", "Sad"),
    ("Missing the bus has ruined my day.", "Sad",
     "Missing the bus completely ruined my entire day.", "Sad",
     "Missing the bus has made me furious.", "Angry"),
    ("My friend surprised me with a gift.", "Happy",
     "I was delighted when my friend gave me a gift.", "Happy",
     "My friend surprised me with a rude comment.", "Angry"),
    ("The news of the accident left me in tears.", "Sad",
     "I cried when I heard about the accident.", "Sad",
     "The news of the accident left me feeling numb.", "Others"),
    ("I'm so angry that my computer crashed again!", "Angry",
     "It's infuriating that my computer crashed again!", "Angry",
     "I'm so sad that my computer crashed again.", "Sad"),
    ("It's a beautiful day outside, I feel great.", "Happy",
     "The nice weather outside makes me feel wonderful.", "Happy",
     "It's a beautiful day outside, but I feel anxious.", "Others"),
    ("The way they treated me was so disrespectful.", "Angry",
     "Their treatment of me was incredibly disrespectful.", "Angry",
     "The way they treated me was so kind.", "Happy"),
    ("I'm feeling down because I didn't get the job.", "Sad",
     "I'm feeling really sad because I didn't get hired.", "Sad",
     "I'm feeling great because I got the job.", "Happy"),
    ("This project has been so rewarding.", "Happy",
     "Working on this project has been incredibly fulfilling.", "Happy",
     "This project has been so frustrating.", "Angry"),
    ("I can't stand the traffic jam every morning.", "Angry",
     "The daily traffic jam every morning drives me nuts.", "Angry",
     "I love the peaceful mornings without traffic jams.", "Happy"),
    ("I'm ecstatic about the new opportunities ahead!", "Happy",
     "I'm thrilled about the upcoming new opportunities!", "Happy",
     "I'm anxious about the new challenges ahead.", "Sad"),
    ("I can't believe they forgot my birthday.", "Sad",
     "It's disappointing that they forgot my birthday.", "Sad",
     "I can't believe they remembered my birthday.", "Happy"),
]

TREC = [
    ("What does 'CPU' stand for?", "ABBR", "What is the meaning of 'CPU'?", "ABBR",
     "Where is the 'CPU' located?", "LOC"),
    ("What is the capital of France?", "LOC", "Which city is the capital of France?", "LOC",
     "What is the population of France?", "NUM"),
    ("Who discovered electricity?", "HUM", "Name the person who discovered electricity.", "HUM",
     "When was electricity discovered?", "NUM"),
    ("What is the boiling point of water?", "NUM", "At what temperature does water boil?", "NUM",
     "Who discovered the boiling point of water?", "HUM"),
    ("Who is the CEO of Tesla?", "HUM", "Identify the current CEO of Tesla.", "HUM",
     "Where is the headquarters of Tesla?", "LOC"),
    ("What does 'HTTP' mean?", "ABBR", "Explain the term 'HTTP'.", "ABBR",
     "Who invented 'HTTP'?", "HUM"),
    ("Name a famous painter from Spain.", "HUM", "Who is a renowned Spanish painter?", "HUM",
     "What is a famous painting from Spain?", "ENTY"),
    ("Describe the process of photosynthesis.", "DESC", "Explain how photosynthesis works.", "DESC",
     "Who discovered photosynthesis?", "HUM"),
    ("Where is the Great Wall of China located?", "LOC", "Locate the Great Wall of China.", "LOC",
     "When was the Great Wall of China built?", "NUM"),
    ("How many continents are there?", "NUM", "How many continents exist?", "NUM",
     "What is the largest continent?", "ENTY"),
    ("What is the full form of 'UNICEF'?", "ABBR", "What does the abbreviation 'UNICEF' represent?", "ABBR",
     "Who founded 'UNICEF'?", "HUM"),
    ("Who won the Nobel Peace Prize in 2020?", "HUM", "Who was awarded the Nobel Peace Prize in 2020?", "HUM",
     "What is the prize money for the Nobel Peace Prize?", "NUM"),
    ("What is the meaning of 'quantum physics'?", "DESC", "Define 'quantum physics'.", "DESC",
     "Who coined the term 'quantum physics'?", "HUM"),
    ("Name the author of 'Pride and Prejudice'.", "HUM", "Identify the writer of 'Pride and Prejudice'.", "HUM",
     "When was 'Pride and Prejudice' published?", "NUM"),
    ("What is the largest ocean on Earth?", "ENTY", "Which ocean is the largest on Earth?", "ENTY",
     "Where is the largest ocean located?", "LOC"),
    ("How tall is Mount Everest?", "NUM", "What is the height of Mount Everest?", "NUM",
     "Who measured the height of Mount Everest?", "HUM"),
    ("What does 'DNA' stand for?", "ABBR", "Explain what 'DNA' stands for.", "ABBR",
     "Where is 'DNA' found?", "LOC"),
    ("What type of animal is a tiger?", "ENTY", "What species does a tiger belong to?", "ENTY",
     "Where are tigers commonly found?", "LOC"),
    ("Explain the theory of relativity.", "DESC", "Describe the concept of relativity.", "DESC",
     "Who developed the theory of relativity?", "HUM"),
    ("Who was the first woman to fly solo across the Atlantic?", "HUM",
     "Who was the first female to fly solo across the Atlantic?", "HUM",
     "When did the first woman fly solo across the Atlantic?", "NUM"),
]

HATE = [
    ("You are such an inspiration to everyone around you.", "noHate",
     "You inspire everyone around you.", "noHate",
     "You are such a burden to everyone around you.", "hate"),
    ("I hate it when people like you try to ruin everything.", "hate",
     "I can't stand it when people like you mess everything up.", "hate",
     "I love it when people like you try to make things better.", "noHate"),
    ("Your kindness and generosity know no bounds.", "noHate",
     "Your endless kindness and generosity are remarkable.", "noHate",
     "Your selfishness and greed know no bounds.", "hate"),
    ("People like you make this world a terrible place.", "hate",
     "People like you make this world worse.", "hate",
     "People like you make this world a wonderful place.", "noHate"),
    ("I'm so grateful for your support and friendship.", "noHate",
     "I'm deeply thankful for your support and friendship.", "noHate",
     "I'm so resentful of your support and friendship.", "hate"),
    ("You are nothing but a waste of space.", "hate",
     "You are completely useless.", "hate",
     "You are everything but a waste of space.", "noHate"),
    ("Your efforts are making a significant difference.", "noHate",
     "Your contributions are having a major impact.", "noHate",
     "Your efforts are making no difference at all.", "hate"),
    ("You don't belong here, go back to where you came from.", "hate",
     "You should leave and never come back.", "hate",
     "You belong here, stay where you are.", "noHate"),
    ("Thank you for always being there for me.", "noHate",
     "Thanks for always being supportive.", "noHate",
     "Thank you for never being there for me.", "hate"),
    ("You are the reason why nothing ever gets better.", "hate",
     "You are why things never improve.", "hate",
     "You are the reason why everything gets better.", "noHate"),
    ("Your dedication to helping others is commendable.", "noHate",
     "Your commitment to helping others is admirable.", "noHate",
     "Your dedication to harming others is commendable.", "hate"),
    ("I can't stand people like you.", "hate",
     "People like you are unbearable.", "hate",
     "I can't stand people like you making a positive impact.", "noHate"),
    ("You have a heart of gold and it shows in everything you do.", "noHate",
     "Your golden heart is evident in all your actions.", "noHate",
     "You have a heart of stone and it shows in everything you do.", "hate"),
    ("Why don't you just disappear already?", "hate",
     "Why don't you just go away?", "hate",
     "Why don't you just stay and make things better?", "noHate"),
    ("I'm amazed by your talent and hard work.", "noHate",
     "Your talent and hard work are truly impressive.", "noHate",
     "I'm amazed by your lack of talent and hard work.", "hate"),
    ("You're nothing but a burden to everyone.", "hate",
     "You're a burden to everyone around you.", "hate",
     "You're nothing but a blessing to everyone.", "noHate"),
    ("Your positive attitude is contagious.", "noHate",
     "Your positive outlook is infectious.", "noHate",
     "Your negative attitude is contagious.", "hate"),
    ("You are a disgrace to your family.", "hate",
     "You are a shame to your family.", "hate",
     "You are an honor to your family.", "noHate"),
    ("I appreciate your thoughtful advice and guidance.", "noHate",
     "I value your wise advice and guidance.", "noHate",
     "I despise your thoughtful advice and guidance.", "hate"),
    ("You are the worst kind of person.", "hate",
     "You are the worst person I've ever met.", "hate",
     "You are the best kind of person.", "noHate"),
]

SVO = [
    ("她喝水。", "She drinks water."),
    ("我们吃米饭。", "We eat rice."),
    ("他们看电视。", "They watch TV."),
    ("他读书。", "He reads book."),
]

INSTRUCTIONS = {
    "capitals": "Please identify the capital city for the given country.",
    "colors": "Please identify the color of the given object.",
    "sst2": "The task involves classifying sentences based on their expressed sentiment. "
            "Please classify each given sentence into one of the following sentiment labels: positive or negative.",
    "trec": "The task involves categorizing questions into specific categories based on their content. "
            "Please classify each given question into one of the following broad class labels: "
            "Abbreviation, Entity, Description, Human, Location, or Number.",
    "emo": "Please classify the given utterance into one of the following emotion classes: "
           "happy, sad, angry, or others.",
}


def write_jsonl(path, rows):
    with open(path, "w", encoding="utf-8") as f:
        for r in rows:
            f.write(json.dumps(r, ensure_ascii=False) + "\n")


def write_json(path, obj):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(obj, f, ensure_ascii=False, indent=2)
        f.write("\n")


def pairs(name, data, task_token, instruction, input_marker):
    write_jsonl(os.path.join(OUT, name + ".jsonl"),
                [{"input": a, "label": b} for a, b in data])
    write_json(os.path.join(OUT, name + ".meta.json"), {
        "name": name,
        "task_token": task_token,
        "sub_token_policy": "first_subtoken",
        "input_marker": input_marker,
        "label_marker": "Label:",
        "instruction": instruction,
    })


def triplets(name, data, task_token, instruction):
    rows = []
    n = len(data)
    for i, (t, tl, s, sl, x, xl) in enumerate(data):
        # baseline: an unrelated sample drawn from elsewhere in the same table
        bt, btl = data[(i + 10) % n][0], data[(i + 10) % n][1]
        rows.append({
            "test": {"input": t, "label": tl},
            "semantic": {"input": s, "label": sl},
            "lexical": {"input": x, "label": xl},
            "baseline": {"input": bt, "label": btl},
        })
    write_jsonl(os.path.join(OUT, name + ".jsonl"), rows)
    write_json(os.path.join(OUT, name + ".meta.json"), {
        "name": name,
        "task_token": task_token,
        "sub_token_policy": "first_subtoken",
        "input_marker": "Sentence:",
        "label_marker": "Label:",
        "instruction": instruction,
    })


def main():
    os.makedirs(OUT, exist_ok=True)
    pairs("capitals", CAPITALS, "capital", INSTRUCTIONS["capitals"], "Word:")
    pairs("colors", COLORS, "color", INSTRUCTIONS["colors"], "Word:")
    triplets("triplets-sst2", SST2, "positive", INSTRUCTIONS["sst2"])
    triplets("triplets-emo", EMO, "emotion", INSTRUCTIONS["emo"])
    triplets("triplets-trec", TREC, "question", INSTRUCTIONS["trec"])
    triplets("triplets-hate", HATE, "hate", "")
    write_jsonl(os.path.join(OUT, "svo-translation.jsonl"),
                [{"input": a, "label": b} for a, b in SVO])
    write_json(os.path.join(OUT, "svo-translation.meta.json"), {
        "name": "svo-translation",
        "task_token": "subject",
        "sub_token_policy": "first_subtoken",
        "input_marker": "Sentence:",
        "label_marker": "Label:",
        "instruction": "",
        "targets": ["subject", "verb", "object"],
    })
    print("wrote datasets to", os.path.abspath(OUT))


if __name__ == "__main__":
    main()
