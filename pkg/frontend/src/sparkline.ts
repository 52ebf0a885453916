import type { EventMarker, VitalPoint } from "./types.js";

const WIDTH = 260;
const HEIGHT = 48;
const PAD = 4;

function dayNumber(iso: string): number {
  return Date.parse(`${iso}T00:00:00Z`) / 86_400_000;
}

/**
 * SVG sparkline for one vital. Observed points are filled dots on the line,
 * imputed points are hollow (visually distinct by contract), and clinical
 * events show as vertical markers.
 */
export function sparklineSvg(points: VitalPoint[], events: EventMarker[] = []): string {
  if (points.length === 0) {
    return `<svg class="sparkline" width="${WIDTH}" height="${HEIGHT}"></svg>`;
  }
  const days = points.map((p) => dayNumber(p.date));
  const values = points.map((p) => p.value);
  const minDay = Math.min(...days);
  const maxDay = Math.max(...days);
  const minV = Math.min(...values);
  const maxV = Math.max(...values);
  const daySpan = maxDay - minDay || 1;
  const valueSpan = maxV - minV || 1;
  const x = (d: number) => PAD + ((d - minDay) / daySpan) * (WIDTH - 2 * PAD);
  const y = (v: number) => HEIGHT - PAD - ((v - minV) / valueSpan) * (HEIGHT - 2 * PAD);

  const path = points
    .map((p, i) => `${i === 0 ? "M" : "L"}${x(dayNumber(p.date)).toFixed(1)},${y(p.value).toFixed(1)}`)
    .join(" ");

  const markers = events
    .filter((ev) => dayNumber(ev.date) >= minDay && dayNumber(ev.date) <= maxDay)
    .map((ev) => {
      const ex = x(dayNumber(ev.date)).toFixed(1);
      return `<line class="event-marker event-${ev.kind}" x1="${ex}" y1="0" x2="${ex}" y2="${HEIGHT}"><title>${ev.kind} ${ev.date}</title></line>`;
    })
    .join("");

  const dots = points
    .map((p) => {
      const cx = x(dayNumber(p.date)).toFixed(1);
      const cy = y(p.value).toFixed(1);
      return p.imputed
        ? `<circle class="dot imputed" cx="${cx}" cy="${cy}" r="2.4" fill="none"><title>${p.date}: ${p.value} (imputed)</title></circle>`
        : `<circle class="dot observed" cx="${cx}" cy="${cy}" r="1.8"><title>${p.date}: ${p.value}</title></circle>`;
    })
    .join("");

  return (
    `<svg class="sparkline" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}">` +
    `${markers}<path class="trend" d="${path}" fill="none"/>${dots}</svg>`
  );
}
