/**
 * Record entry form generated from the service's feature schema.
 *
 * Coded questions become selects; open numeric ranges become number
 * inputs. A blank answer is omitted from the record so the service's
 * imputation model fills it, mirroring intake reality.
 */
import { FeatureSpec, RecordMap } from "./contract.js";

export interface RecordForm {
  element: HTMLElement;
  read(): RecordMap;
  set(name: string, value: number): void;
}

const field = (spec: FeatureSpec): HTMLElement => {
  const wrap = document.createElement("label");
  wrap.className = "field";
  wrap.dataset.field = spec.name;

  const caption = document.createElement("span");
  caption.className = "field-question";
  caption.textContent = spec.question;
  wrap.appendChild(caption);

  if (spec.answers.length > 0) {
    const select = document.createElement("select");
    select.name = spec.name;
    const blank = document.createElement("option");
    blank.value = "";
    blank.textContent = "(unanswered)";
    select.appendChild(blank);
    for (const answer of spec.answers) {
      const opt = document.createElement("option");
      opt.value = String(answer.code);
      opt.textContent = answer.text;
      select.appendChild(opt);
    }
    wrap.appendChild(select);
  } else {
    const input = document.createElement("input");
    input.type = "number";
    input.name = spec.name;
    input.min = String(spec.lo);
    input.max = String(spec.hi);
    input.step = spec.integer_range ? "1" : "any";
    wrap.appendChild(input);
  }
  return wrap;
};

export function buildRecordForm(
  features: FeatureSpec[],
  onChange?: () => void,
): RecordForm {
  const element = document.createElement("form");
  element.className = "record-form";
  for (const spec of features) {
    element.appendChild(field(spec));
  }
  if (onChange) {
    element.addEventListener("change", onChange);
  }

  const controls = (): (HTMLSelectElement | HTMLInputElement)[] =>
    Array.from(element.querySelectorAll("select, input"));

  return {
    element,
    read(): RecordMap {
      const record: RecordMap = {};
      for (const control of controls()) {
        if (control.value === "") continue;
        record[control.name] = Number(control.value);
      }
      return record;
    },
    set(name: string, value: number): void {
      const control = controls().find((c) => c.name === name);
      if (!control) throw new Error(`no form field named ${name}`);
      control.value = String(value);
    },
  };
}
