import java.util.List;

public class Inv {
    private static final int COLUMN_PRICE = 1;
    private static final int COLUMN_QUANTITY = 2;
    private static final int COLUMN_ACTIVE = 3;

    public static double totalOfActiveRows(List<String[]> rows, int discountMode) {
        double total = 0;
        for (String[] row : rows) {
            if (isActive(row)) {
                total += applyDiscount(lineAmount(row), discountMode);
            }
        }
        return total;
    }

    private static boolean isActive(String[] row) {
        return row.length > COLUMN_ACTIVE && row[COLUMN_ACTIVE].equals("Y");
    }

    private static double lineAmount(String[] row) {
        return Double.parseDouble(row[COLUMN_PRICE]) * Integer.parseInt(row[COLUMN_QUANTITY]);
    }

    private static double applyDiscount(double amount, int discountMode) {
        switch (discountMode) {
            case 1: return amount * 0.90;
            case 2: return amount * 0.85;
            default: return amount > 100 ? amount - 5 : amount;
        }
    }
}
