// Prompt texts. Byte-exact; see tests/fixtures/prompts for the rendered goldens.

#include <map>

#include "autograph/errors.hpp"
#include "autograph/llm.hpp"

namespace autograph {

namespace {

constexpr const char* kConstructText = R"(You are an expert knowledge graph constructor.
Your task is to extract factual information from the provided text and represent it strictly as a JSON array of knowledge graph triples.

Output Format

  - The output must be a **JSON array**.

  - Each element in the array must be a **JSON object** with exactly three non-empty keys:

    - "subject": the main entity, concept, event, or attribute.

    - "relation": a concise, descriptive phrase or verb that describes the relationship (e.g., "founded by", "started on", "is a", "has circulation of").

    - "object": the entity, concept, value, event, or attribute that the subject has a relationship with.

Constraints

  - **Do not include any text other than the JSON output.**

  - Do not add explanations, comments, or formatting outside of the JSON array.

  - Extract **all possible and relevant triples**.

  - All keys must exist and all values must be non-empty strings.

  - The "subject" and "object" can be specific entities (e.g., "Radio City", "Football in Albania", "Echosmith") or specific values (e.g., "3 July 2001", "1,310,696").

  - If no triples can be extracted, return exactly: `[]`.

Extracts for:
{passage})";

constexpr const char* kJudgeText = R"(As an advanced reading comprehension assistant, your task is to evaluate whether the provided knowledge graph (KG) context contains sufficient information to deduce the given true answer to the question.
Analyze the KG context carefully and determine if it fully supports the true answer without requiring external knowledge. Respond with only 'Yes' or 'No', indicating whether the true answer can be deduced from the KG context.

Knowledge graph (KG) context:{triples string}

Question:{query}

True Answer:{answer}

Can the true answer be deduced from the KG context? Answer 'Yes' or 'No' only.)";

constexpr const char* kAnswerGraphText = R"(As an advanced reading comprehension assistant, your task is to analyze extracted information and corresponding questions meticulously. If the knowledge graph information is not enough, you can use your own knowledge to answer the question.
Your response start after "Thought: ", where you will methodically break down the reasoning process, illustrating how you arrive at conclusions.
Conclude with "Answer: " to present a concise, definitive response as a noun phrase, no elaborations.

{triples string}

{question}

Thought:)";

constexpr const char* kAnswerTextText = R"(As an advanced reading comprehension assistant, your task is to analyze text passages and corresponding questions meticulously. If the information is not enough, you can use your own knowledge to answer the question.
Your response start after "Thought: ", where you will methodically break down the reasoning process, illustrating how you arrive at conclusions.
Conclude with "Answer: " to present a concise, definitive response as a noun phrase, no elaborations.

{Retrieved Texts}

{question}

Thought:)";

constexpr const char* kMcqGenerateText = R"(You are an expert in generating multiple-choice questions (MCQs) from scientific texts.
Your task is to generate 5 multiple-choice questions based on the following passage.

Each question should:

  - Focus on factual claims, numerical data, definitions, or relational knowledge from the passage.

  - Have 4 options (one correct answer and three plausible distractors).

  - Clearly indicate the correct answer.

The output should be in JSON format, with each question as a dictionary containing:

  - "question": The MCQ question.

  - "options": A list of 4 options (e.g., ["A: ..", "B: ..", "C: ..", "D: .."]).

  - "answer": The correct answer (e.g., "A").

Passage:
{passage})";

constexpr const char* kMcqAnswerText = R"(Given the contexts or evidences:
{contexts}

Here is a multiple-choice question:

Question: {question}

Options:
A. {options_0}
B. {options_1}
C. {options_2}
D. {options_3}

Please select the correct answer by choosing A, B, C, or D. Respond with only the letter of your choice.)";

constexpr const char* kEntityExtractText = R"(Extract the named entities mentioned in the question below.
Return only a JSON array of strings, for example ["Radio City", "Echosmith"]. If there are none, return exactly: [].

Question: {question})";

const std::map<std::string, PromptTemplate, std::less<>>& registry() {
    static const std::map<std::string, PromptTemplate, std::less<>> kTemplates = [] {
        std::map<std::string, PromptTemplate, std::less<>> m;
        auto add = [&](std::string_view name, const char* text) {
            m.emplace(std::string(name), PromptTemplate(std::string(name), text));
        };
        add(templates::kConstruct, kConstructText);
        add(templates::kDeducibleJudge, kJudgeText);
        add(templates::kAnswerGraph, kAnswerGraphText);
        add(templates::kAnswerText, kAnswerTextText);
        add(templates::kMcqGenerate, kMcqGenerateText);
        add(templates::kMcqAnswer, kMcqAnswerText);
        add(templates::kEntityExtract, kEntityExtractText);
        return m;
    }();
    return kTemplates;
}

}  // namespace

const PromptTemplate& prompt_template(std::string_view name) {
    const auto& m = registry();
    auto it = m.find(name);
    if (it == m.end()) throw TemplateError("unknown prompt template '" + std::string(name) + "'");
    return it->second;
}

std::vector<std::string> template_names() {
    std::vector<std::string> names;
    for (const auto& [name, _] : registry()) names.push_back(name);
    return names;
}

}  // namespace autograph
