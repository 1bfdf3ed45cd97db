// Fixed affine mapping between world coordinates (meters, x right, y up)
// and canvas pixels (y down). Pointer handling inverts the same mapping,
// so a drag lands exactly where the cursor is.

export interface WorldBounds {
  xMin: number;
  xMax: number;
  yMin: number;
  yMax: number;
}

// Matches the server's move_target workspace box.
export const WORKSPACE: WorldBounds = {
  xMin: -2.0,
  xMax: 2.0,
  yMin: -1.5,
  yMax: 3.0,
};

export interface Viewport {
  width: number;
  height: number;
  world: WorldBounds;
}

export const DEFAULT_VIEWPORT: Viewport = {
  width: 800,
  height: 600,
  world: WORKSPACE,
};

export interface ScreenPoint {
  x: number;
  y: number;
}

export interface WorldPoint {
  x: number;
  y: number;
}

export function worldToScreen(view: Viewport, p: WorldPoint): ScreenPoint {
  const { xMin, xMax, yMin, yMax } = view.world;
  return {
    x: ((p.x - xMin) / (xMax - xMin)) * view.width,
    y: view.height - ((p.y - yMin) / (yMax - yMin)) * view.height,
  };
}

export function screenToWorld(view: Viewport, p: ScreenPoint): WorldPoint {
  const { xMin, xMax, yMin, yMax } = view.world;
  return {
    x: xMin + (p.x / view.width) * (xMax - xMin),
    y: yMin + ((view.height - p.y) / view.height) * (yMax - yMin),
  };
}

/** Pull a world point back inside the workspace box. */
export function clampToWorkspace(
  bounds: WorldBounds,
  p: WorldPoint,
): { point: WorldPoint; clamped: boolean } {
  const x = Math.min(Math.max(p.x, bounds.xMin), bounds.xMax);
  const y = Math.min(Math.max(p.y, bounds.yMin), bounds.yMax);
  return { point: { x, y }, clamped: x !== p.x || y !== p.y };
}
